"""
Stochastic gradient of the objective with respect to the variational parameters.

Gaussian factors use the plain reparameterization gradient. Gamma factors use
the rejection-sampler reparameterization: a pathwise term through the
transform plus, optionally, the score term f * d/da log pi(eps; a + P).
Gradients are returned in optimization coordinates (see variational.to_unconstrained).
"""
import logging
from concurrent.futures import Executor
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..model.config import ModelConfig
from ..model.latent import GAUSSIAN_LATENTS, LATENT_NAMES, LatentState, TripFeatures, active_latents
from .config import OptimizerConfig
from .objective import estimate_f
from .transforms import gamma_dlog_dshape, gamma_noise_score
from .variational import NoiseDraw, VariationalState, sample_latents

logger = logging.getLogger(__name__)


def reparameterization_gradient(
    v: VariationalState,
    state: LatentState,
    draw: NoiseDraw,
    f_value: float,
    grad_latents: Dict[str, np.ndarray],
    active: Sequence[str],
    score_correction: bool = True,
) -> Dict[str, np.ndarray]:
    """
    Chain rule from latent gradients to optimization coordinates.

    Args:
        v: Variational state the draw came from
        state: The latent draw
        draw: Noise behind the draw
        f_value: Objective value at the draw (used by the gamma score term)
        grad_latents: df/dl for every latent
        active: Latents that receive gradient; all others get zeros
        score_correction: Include the gamma score term

    Returns:
        Gradients keyed like variational.to_unconstrained
    """
    grads = {}
    for latent in LATENT_NAMES:
        if latent in GAUSSIAN_LATENTS:
            mean_key, spread_key = f"{latent}.mean", f"{latent}.log_std"
        else:
            mean_key, spread_key = f"{latent}.log_mean", f"{latent}.log_shape"
        if latent not in active:
            shape = v.get(latent, "mean").shape
            grads[mean_key] = np.zeros(shape)
            grads[spread_key] = np.zeros(shape)
            continue

        g = grad_latents[latent]
        eps = draw.epsilon[latent]
        if latent in GAUSSIAN_LATENTS:
            grads[mean_key] = g.copy()
            grads[spread_key] = g * eps * v.get(latent, "std")
        else:
            x = getattr(state, latent)
            shape = v.get(latent, "shape")
            uniforms = draw.uniforms[latent]
            grads[mean_key] = g * x
            d_shape = g * x * gamma_dlog_dshape(shape, eps, uniforms)
            if score_correction:
                d_shape = d_shape + f_value * gamma_noise_score(shape, eps, uniforms.shape[0])
            grads[spread_key] = d_shape * shape
    return grads


def gradient_estimate(
    v: VariationalState,
    features: Sequence[TripFeatures],
    config: ModelConfig,
    opt: OptimizerConfig,
    rng: np.random.Generator,
    executor: Optional[Executor] = None,
) -> Tuple[Dict[str, np.ndarray], float]:
    """
    One-sample gradient estimate of the objective.

    Returns:
        (gradients in optimization coordinates, objective estimate)
    """
    state, draw = sample_latents(v, rng, opt.gamma_augmentation)
    value, grad_latents = estimate_f(v, (state, draw), features, config, opt, rng, executor)
    grads = reparameterization_gradient(
        v, state, draw, value, grad_latents, active_latents(config), opt.gamma_score_correction
    )
    return grads, value
