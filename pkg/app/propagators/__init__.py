__all__ = ["context", "service"]
