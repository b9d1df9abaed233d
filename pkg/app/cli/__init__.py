__all__ = ["commands", "config", "expr", "report"]
