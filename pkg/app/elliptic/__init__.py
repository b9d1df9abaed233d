__all__ = ["operator", "sector"]
