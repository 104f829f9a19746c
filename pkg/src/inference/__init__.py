"""
Inference module - variational family, bounded objective, gradients and the SVI driver.
"""

__all__ = [
    "OptimizerConfig",
    "VariationalState",
    "NoiseDraw",
    "init_variational_state",
    "sample_latents",
    "Minibatch",
    "sample_minibatch",
    "one_vs_each_step_bound",
    "evaluate_f",
    "estimate_f",
    "exact_bound_objective",
    "gradient_estimate",
    "reparameterization_gradient",
    "AdaptiveStepSize",
    "fit",
    "trace_frame",
    "save_checkpoint",
    "load_checkpoint",
    "verify_catalog",
]

_MODULES = {
    "OptimizerConfig": "config",
    "VariationalState": "variational",
    "NoiseDraw": "variational",
    "init_variational_state": "variational",
    "sample_latents": "variational",
    "Minibatch": "objective",
    "sample_minibatch": "objective",
    "one_vs_each_step_bound": "objective",
    "evaluate_f": "objective",
    "estimate_f": "objective",
    "exact_bound_objective": "objective",
    "gradient_estimate": "gradients",
    "reparameterization_gradient": "gradients",
    "AdaptiveStepSize": "optimizer",
    "fit": "trainer",
    "trace_frame": "trainer",
    "save_checkpoint": "checkpoint",
    "load_checkpoint": "checkpoint",
    "verify_catalog": "checkpoint",
}


def __getattr__(name):
    if name in _MODULES:
        from importlib import import_module
        return getattr(import_module(f".{_MODULES[name]}", __name__), name)
    raise AttributeError(f"module 'src.inference' has no attribute {name}")
