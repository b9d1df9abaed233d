__all__ = ["cache", "parallel", "retry"]
