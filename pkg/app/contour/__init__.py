__all__ = ["kernels", "mittag_leffler", "nodes"]
