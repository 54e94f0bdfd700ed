from .pipeline import symbolic_pooling_pipeline

__all__ = ["symbolic_pooling_pipeline"]
