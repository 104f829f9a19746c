"""
Reparameterization transforms for the Gaussian and gamma variational factors.

Gamma draws use the Marsaglia-Tsang rejection sampler at the augmented
shape a + P, followed by P uniform boosts that bring the shape back to a:

    x = (mean / a) * h(eps, a + P) * prod_{i=1..P} u_i^(1 / (a + i - 1))
    h(eps, s) = (s - 1/3) (1 + eps / sqrt(9 s - 3))^3

so that x ~ Gamma(shape a, rate a / mean).
"""
from typing import Tuple

import numpy as np
from scipy.special import digamma

_TINY = np.finfo(float).tiny


def gaussian_transform(mean: np.ndarray, std: np.ndarray, eps: np.ndarray) -> np.ndarray:
    return mean + std * eps


def _mt_constants(augmented_shape: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Marsaglia-Tsang d = s - 1/3 and scale sqrt(9 s - 3)."""
    d = augmented_shape - 1.0 / 3.0
    return d, np.sqrt(9.0 * d)


def marsaglia_tsang_h(eps: np.ndarray, augmented_shape: np.ndarray) -> np.ndarray:
    d, scale = _mt_constants(augmented_shape)
    return d * (1.0 + eps / scale) ** 3


def sample_accepted_noise(augmented_shape: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Draw Marsaglia-Tsang noise conditioned on acceptance.

    Rejected entries are redrawn until every entry is accepted.
    """
    d, scale = _mt_constants(np.ravel(augmented_shape))
    eps = np.empty(d.shape)
    pending = np.arange(d.size)
    while pending.size:
        e = rng.standard_normal(pending.size)
        u = 1.0 - rng.random(pending.size)
        y = 1.0 + e / scale[pending]
        v = y ** 3
        dp = d[pending]
        with np.errstate(invalid="ignore", divide="ignore"):
            accept = (y > 0) & (np.log(u) < 0.5 * e ** 2 + dp - dp * v + dp * np.log(v))
        eps[pending[accept]] = e[accept]
        pending = pending[~accept]
    return eps.reshape(np.shape(augmented_shape))


def sample_boost_uniforms(shape: Tuple[int, ...], degree: int, rng: np.random.Generator) -> np.ndarray:
    """Uniforms in (0, 1] for the shape boosts, stacked along a leading axis of size `degree`."""
    return 1.0 - rng.random((degree,) + tuple(shape))


def _boost_offsets(degree: int, ndim: int) -> np.ndarray:
    return np.arange(degree, dtype=float).reshape((degree,) + (1,) * ndim)


def gamma_log_transform(
    shape: np.ndarray,
    mean: np.ndarray,
    eps: np.ndarray,
    uniforms: np.ndarray,
) -> np.ndarray:
    """Log of the reparameterized gamma draw."""
    degree = uniforms.shape[0]
    h = marsaglia_tsang_h(eps, shape + degree)
    offsets = _boost_offsets(degree, shape.ndim)
    boost = (np.log(uniforms) / (shape + offsets)).sum(axis=0)
    return np.log(mean) - np.log(shape) + np.log(h) + boost


def gamma_transform(shape: np.ndarray, mean: np.ndarray, eps: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Reparameterized gamma draw, kept strictly positive."""
    return np.maximum(np.exp(gamma_log_transform(shape, mean, eps, uniforms)), _TINY)


def _log_h_dshape(eps: np.ndarray, augmented_shape: np.ndarray) -> np.ndarray:
    """d log h / d s at fixed eps."""
    d, scale = _mt_constants(augmented_shape)
    return 1.0 / d - 13.5 * eps / (scale ** 3 * (1.0 + eps / scale))


def gamma_dlog_dshape(shape: np.ndarray, eps: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """
    d log x / d a of the reparameterized draw at fixed noise.

    The mean enters as a scale, so d log x / d log mean = 1.
    """
    degree = uniforms.shape[0]
    offsets = _boost_offsets(degree, shape.ndim)
    boost = (-np.log(uniforms) / (shape + offsets) ** 2).sum(axis=0)
    return -1.0 / shape + _log_h_dshape(eps, shape + degree) + boost


def gamma_noise_score(shape: np.ndarray, eps: np.ndarray, degree: int) -> np.ndarray:
    """
    d/da of the log density of the accepted noise.

    The accepted noise has density proportional to q_s(h(eps, s)) |dh/deps|
    with s = a + degree and q_s the standard gamma density.
    """
    s = shape + degree
    d, scale = _mt_constants(s)
    h = marsaglia_tsang_h(eps, s)
    dh_ds = h * _log_h_dshape(eps, s)
    dlog_q = np.log(h) - digamma(s) + ((s - 1.0) / h - 1.0) * dh_ds
    dlog_jacobian = 1.0 / d - 9.0 / (2.0 * scale ** 2) - 9.0 * eps / (scale ** 3 * (1.0 + eps / scale))
    return dlog_q + dlog_jacobian
