"""
Model module - latent parameterization, utilities and basket likelihoods.
"""

__all__ = [
    "ModelConfig",
    "load_tie_groups",
    "LatentState",
    "TripFeatures",
    "trip_features",
    "active_latents",
    "mean_utility_psi",
    "interaction_utility",
    "full_utility",
    "choice_distribution",
    "interaction_asymmetry",
    "ordered_basket_loglik",
    "unordered_basket_loglik_exact",
]


def __getattr__(name):
    if name in {"ModelConfig", "load_tie_groups"}:
        from .config import ModelConfig, load_tie_groups
        return ModelConfig if name == "ModelConfig" else load_tie_groups
    if name in {"LatentState", "TripFeatures", "trip_features", "active_latents"}:
        from . import latent
        return getattr(latent, name)
    if name in {"mean_utility_psi", "interaction_utility", "full_utility",
                "choice_distribution", "interaction_asymmetry"}:
        from . import utility
        return getattr(utility, name)
    if name in {"ordered_basket_loglik", "unordered_basket_loglik_exact"}:
        from . import likelihood
        return getattr(likelihood, name)
    raise AttributeError(f"module 'src.model' has no attribute {name}")
