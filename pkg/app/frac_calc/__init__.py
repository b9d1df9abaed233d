__all__ = ["operators", "series"]
