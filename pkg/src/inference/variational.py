"""
Mean-field variational family: Gaussian factors for rho, alpha, lambda, theta,
mu and delta; gamma factors (shape, mean) for gamma and beta.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..config import GAMMA_SHAPE_AUGMENTATION, PARAMETER_FLOOR
from ..exceptions import DomainError
from ..ingestion.catalog import Catalog
from ..model.config import ModelConfig
from ..model.latent import (
    GAMMA_LATENTS,
    GAUSSIAN_LATENTS,
    LATENT_NAMES,
    LatentState,
    latent_shapes,
    resolve_item_groups,
)
from .config import OptimizerConfig
from .transforms import (
    gamma_transform,
    gaussian_transform,
    sample_accepted_noise,
    sample_boost_uniforms,
)

logger = logging.getLogger(__name__)

_LOG_FLOOR = float(np.log(PARAMETER_FLOOR))


def factor_params(latent: str) -> Tuple[str, str]:
    """Names of the two variational parameters of a latent."""
    return ("mean", "std") if latent in GAUSSIAN_LATENTS else ("shape", "mean")


@dataclass
class VariationalState:
    """
    Variational parameters of every latent.

    Attributes:
        params: Arrays keyed '<latent>.<param>', e.g. 'rho.mean', 'rho.std',
            'beta.shape', 'beta.mean'
        item_group: Row of beta and mu used by each item
    """
    params: Dict[str, np.ndarray]
    item_group: np.ndarray

    def get(self, latent: str, param: str) -> np.ndarray:
        return self.params[f"{latent}.{param}"]

    def validate(self) -> "VariationalState":
        for latent in LATENT_NAMES:
            for param in factor_params(latent):
                key = f"{latent}.{param}"
                if key not in self.params:
                    raise DomainError(f"missing variational parameter {key}")
                values = self.params[key]
                if not np.all(np.isfinite(values)):
                    raise DomainError(f"{key} has non-finite entries")
                if param != "mean" or latent in GAMMA_LATENTS:
                    if not np.all(values > 0):
                        raise DomainError(f"{key} must be positive")
        return self

    def mean_latents(self) -> LatentState:
        """Latent state at the variational means."""
        return LatentState(
            item_group=self.item_group,
            **{latent: self.get(latent, "mean").copy() for latent in LATENT_NAMES},
        )

    def copy(self) -> "VariationalState":
        return VariationalState(
            params={key: value.copy() for key, value in self.params.items()},
            item_group=self.item_group.copy(),
        )


@dataclass
class NoiseDraw:
    """
    Auxiliary noise behind one latent draw.

    Attributes:
        epsilon: Standard normal noise (Gaussian latents) or accepted
            Marsaglia-Tsang noise (gamma latents), keyed by latent
        uniforms: Shape-boost uniforms of the gamma latents, (degree, *shape)
    """
    epsilon: Dict[str, np.ndarray]
    uniforms: Dict[str, np.ndarray]


def init_variational_state(
    config: ModelConfig,
    catalog: Catalog,
    opt: OptimizerConfig,
    rng: np.random.Generator,
) -> VariationalState:
    """
    Random initialization of the variational parameters.

    Gaussian means ~ N(0, init_std^2) with std = init_std; gamma shapes are
    1 plus uniform jitter and gamma means equal init_gamma_mean.
    """
    item_group, n_groups = resolve_item_groups(config, catalog)
    shapes = latent_shapes(config, catalog.n_items, catalog.n_users, n_groups)
    params: Dict[str, np.ndarray] = {}
    for latent in LATENT_NAMES:
        shape = shapes[latent]
        if latent in GAUSSIAN_LATENTS:
            params[f"{latent}.mean"] = rng.normal(0.0, opt.init_std, size=shape)
            params[f"{latent}.std"] = np.full(shape, opt.init_std)
        else:
            params[f"{latent}.shape"] = 1.0 + opt.init_shape_jitter * rng.random(shape)
            params[f"{latent}.mean"] = np.full(shape, opt.init_gamma_mean)
    logger.info(
        f"Initialized variational state: {catalog.n_items} items, {catalog.n_users} users, "
        f"{n_groups} price/season groups"
    )
    return VariationalState(params=params, item_group=item_group)


def sample_latents(
    v: VariationalState,
    rng: np.random.Generator,
    augmentation: int = GAMMA_SHAPE_AUGMENTATION,
) -> Tuple[LatentState, NoiseDraw]:
    """Draw one latent state through the reparameterization transforms."""
    values: Dict[str, np.ndarray] = {}
    epsilon: Dict[str, np.ndarray] = {}
    uniforms: Dict[str, np.ndarray] = {}
    for latent in LATENT_NAMES:
        if latent in GAUSSIAN_LATENTS:
            mean = v.get(latent, "mean")
            eps = rng.standard_normal(mean.shape)
            values[latent] = gaussian_transform(mean, np.maximum(v.get(latent, "std"), PARAMETER_FLOOR), eps)
        else:
            shape = v.get(latent, "shape")
            eps = sample_accepted_noise(shape + augmentation, rng)
            boosts = sample_boost_uniforms(shape.shape, augmentation, rng)
            values[latent] = gamma_transform(shape, v.get(latent, "mean"), eps, boosts)
            uniforms[latent] = boosts
        epsilon[latent] = eps
    state = LatentState(item_group=v.item_group, **values)
    return state, NoiseDraw(epsilon=epsilon, uniforms=uniforms)


def to_unconstrained(v: VariationalState) -> Dict[str, np.ndarray]:
    """Optimization coordinates: Gaussian means as is, every positive parameter in log space."""
    coords = {}
    for latent in LATENT_NAMES:
        for param in factor_params(latent):
            value = v.get(latent, param)
            if latent in GAUSSIAN_LATENTS and param == "mean":
                coords[f"{latent}.mean"] = value.copy()
            else:
                coords[f"{latent}.log_{param}"] = np.log(value)
    return coords


def clamp_unconstrained(coords: Dict[str, np.ndarray]) -> None:
    """Floor every log-parameter at log(PARAMETER_FLOOR), in place."""
    for key, value in coords.items():
        if ".log_" in key:
            np.maximum(value, _LOG_FLOOR, out=value)


def from_unconstrained(coords: Dict[str, np.ndarray], item_group: np.ndarray) -> VariationalState:
    params = {}
    for key, value in coords.items():
        latent, param = key.split(".")
        if param.startswith("log_"):
            params[f"{latent}.{param[4:]}"] = np.exp(np.maximum(value, _LOG_FLOOR))
        else:
            params[key] = value.copy()
    return VariationalState(params=params, item_group=item_group)
