__all__ = ["holder", "verify"]
