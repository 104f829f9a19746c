"""
Shopper - sequential probabilistic model of shopping baskets.
"""
__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "Trip",
    "load_dataset",
    "ModelConfig",
    "OptimizerConfig",
    "fit",
    "save_checkpoint",
    "load_checkpoint",
    "summarize",
]


def __getattr__(name):
    if name in {"Catalog", "Trip", "load_dataset"}:
        from .ingestion import Catalog, Trip, load_dataset
        return {
            "Catalog": Catalog,
            "Trip": Trip,
            "load_dataset": load_dataset,
        }[name]
    if name == "ModelConfig":
        from .model.config import ModelConfig
        return ModelConfig
    if name in {"OptimizerConfig", "fit", "save_checkpoint", "load_checkpoint"}:
        from .inference import OptimizerConfig, fit, save_checkpoint, load_checkpoint
        return {
            "OptimizerConfig": OptimizerConfig,
            "fit": fit,
            "save_checkpoint": save_checkpoint,
            "load_checkpoint": load_checkpoint,
        }[name]
    if name == "summarize":
        from .evaluation.summary import summarize
        return summarize
    raise AttributeError(f"module 'src' has no attribute {name}")
