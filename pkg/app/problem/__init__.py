__all__ = ["compat", "lift", "models", "presets", "solver"]
