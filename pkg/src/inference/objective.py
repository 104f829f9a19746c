"""
Bounded variational objective and its analytic gradient with respect to the latents.

For one latent draw l the objective is

    f = log p(l) - log q(l; nu)
        + (T / |B_T|) sum_{t in B_T} mean_{orderings} sum_i
          ((C_ti - 1) / |B_C|) sum_{c' in B_C} log sigmoid(Psi(y_ti) - Psi(c'))

where C_ti is the number of items that can still be chosen at step i,
B_T a subsample of trips and B_C a subsample of the alternatives at each step.
Sampling (trips, orderings, negatives) is separated from evaluation so that
tests can freeze a subsample.
"""
import itertools
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, gammaln, log_expit

from ..config import TRIP_CHUNK_SIZE
from ..exceptions import BasketSizeError, DomainError
from ..ingestion.catalog import Catalog, Trip
from ..model.config import ModelConfig
from ..model.latent import GAUSSIAN_LATENTS, LatentState, TripFeatures, active_latents, trip_features
from ..model.utility import candidate_utilities, feasible_mask, psi_vector
from .config import OptimizerConfig
from .variational import NoiseDraw, VariationalState

logger = logging.getLogger(__name__)

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class TripSample:
    """
    One sampled ordering of one trip.

    Attributes:
        trip_index: Index into the trip feature list
        order: Items in choice order, checkout last
        negatives: Negative items for every step of `order`
        weight: Multiplier of the trip's bound (trip scale / orderings per trip)
    """
    trip_index: int
    order: Tuple[int, ...]
    negatives: List[np.ndarray]
    weight: float


@dataclass
class Minibatch:
    samples: List[TripSample]


def step_alternatives(features: TripFeatures, order: Sequence[int], position: int) -> np.ndarray:
    """Items that could have been chosen instead of order[position]."""
    feasible = feasible_mask(features, order[:position])
    feasible[order[position]] = False
    return np.flatnonzero(feasible)


def sample_minibatch(
    features: Sequence[TripFeatures],
    opt: OptimizerConfig,
    rng: np.random.Generator,
) -> Minibatch:
    """Draw trips, one random ordering per trip (checkout last) and negatives per step."""
    n_trips = len(features)
    if n_trips == 0:
        return Minibatch(samples=[])
    batch = min(opt.batch_trips, n_trips)
    chosen = np.sort(rng.choice(n_trips, size=batch, replace=False))
    weight = n_trips / batch / opt.permutations_per_trip

    samples = []
    for index in chosen:
        trip = features[index].trip
        for _ in range(opt.permutations_per_trip):
            order = tuple(int(i) for i in rng.permutation(trip.purchases)) + (trip.items[-1],)
            negatives = []
            for position in range(len(order)):
                alternatives = step_alternatives(features[index], order, position)
                size = min(opt.batch_negatives, len(alternatives))
                negatives.append(np.sort(rng.choice(alternatives, size=size, replace=False)))
            samples.append(TripSample(int(index), order, negatives, weight))
    return Minibatch(samples=samples)


def full_minibatch(features: Sequence[TripFeatures], cap: int) -> Minibatch:
    """Every trip, every ordering (checkout last) and every negative, each trip weighted once."""
    samples = []
    for index, feat in enumerate(features):
        trip = feat.trip
        if len(trip.purchases) > cap:
            raise BasketSizeError(
                f"trip {trip.trip_id} has {len(trip.purchases)} items; cannot enumerate orderings beyond {cap}"
            )
        orders = [perm + (trip.items[-1],) for perm in itertools.permutations(trip.purchases)]
        for order in orders:
            negatives = [step_alternatives(feat, order, p) for p in range(len(order))]
            samples.append(TripSample(index, order, negatives, 1.0 / len(orders)))
    return Minibatch(samples=samples)


def recorded_order_minibatch(features: Sequence[TripFeatures]) -> Minibatch:
    """Every trip in recorded order with every negative."""
    samples = []
    for index, feat in enumerate(features):
        order = feat.trip.items
        negatives = [step_alternatives(feat, order, p) for p in range(len(order))]
        samples.append(TripSample(index, order, negatives, 1.0))
    return Minibatch(samples=samples)


def one_vs_each_step_bound(
    state: LatentState,
    config: ModelConfig,
    catalog: Catalog,
    trip: Trip,
    position: int,
    negatives: Sequence[int],
    order: Optional[Sequence[int]] = None,
) -> float:
    """
    Subsampled one-vs-each lower bound on the log-probability of one choice step.

    Args:
        position: 0-based step in `order` (recorded order when omitted)
        negatives: Alternatives to compare against, disjoint from the prefix and the target

    Returns:
        (alternatives / |negatives|) * sum log sigmoid(Psi(target) - Psi(c'))
    """
    order = tuple(trip.items if order is None else order)
    features = trip_features(catalog, trip)
    alternatives = step_alternatives(features, order, position)
    negatives = np.asarray(negatives, dtype=np.int64)
    if len(alternatives) == 0:
        return 0.0
    if len(negatives) == 0:
        raise DomainError("negatives must be nonempty when alternatives exist")
    if not np.isin(negatives, alternatives).all():
        raise DomainError("negatives must be feasible and disjoint from the basket prefix and the target")

    candidates = np.concatenate(([order[position]], negatives))
    utilities, _ = candidate_utilities(state, config, features, order[:position], candidates)
    scale = len(alternatives) / len(negatives)
    return float(scale * log_expit(utilities[0] - utilities[1:]).sum())


def _backprop_step(
    state: LatentState,
    config: ModelConfig,
    prefix: np.ndarray,
    candidates: np.ndarray,
    coef: np.ndarray,
    lookahead: np.ndarray,
    g_psi: np.ndarray,
    grads: Dict[str, np.ndarray],
) -> None:
    """Accumulate d(sum coef * Psi(candidates)) into g_psi and the rho/alpha gradients."""
    g_psi[candidates] += coef
    m = len(prefix)
    if m:
        grads["rho"][candidates] += np.outer(coef, state.alpha[prefix].mean(axis=0))
        grads["alpha"][prefix] += (coef @ state.rho[candidates]) / m
    if config.think_ahead:
        has = lookahead >= 0
        if has.any():
            best, c_coef, cands = lookahead[has], coef[has], candidates[has]
            np.add.at(g_psi, best, c_coef)
            summed = state.alpha[prefix].sum(axis=0) if m else 0.0
            np.add.at(grads["rho"], best, c_coef[:, None] * (state.alpha[cands] + summed) / (m + 1))
            to_alpha = c_coef[:, None] * state.rho[best] / (m + 1)
            np.add.at(grads["alpha"], cands, to_alpha)
            if m:
                grads["alpha"][prefix] += to_alpha.sum(axis=0)


def _backprop_psi(
    state: LatentState,
    config: ModelConfig,
    features: TripFeatures,
    g_psi: np.ndarray,
    grads: Dict[str, np.ndarray],
) -> None:
    """Push the per-item coefficients on psi through to the latents."""
    items = np.flatnonzero(g_psi)
    g = g_psi[items]
    user = features.user
    grads["lam"][items] += g
    if config.use_preferences:
        grads["alpha"][items] += np.outer(g, state.theta[user])
        grads["theta"][user] += g @ state.alpha[items]
    groups = state.item_group[items]
    if config.use_price:
        gx = g * features.log_price[items]
        np.add.at(grads["beta"], groups, -np.outer(gx, state.gamma[user]))
        grads["gamma"][user] -= gx @ state.beta[groups]
    if config.use_season:
        np.add.at(grads["mu"], groups, np.outer(g, state.delta[features.week_row]))
        grads["delta"][features.week_row] += g @ state.mu[groups]


def trip_bound(
    state: LatentState,
    config: ModelConfig,
    features: TripFeatures,
    sample: TripSample,
    grads: Optional[Dict[str, np.ndarray]] = None,
) -> float:
    """
    Weighted one-vs-each bound of one sampled ordering; adds its gradient into `grads` when given.
    """
    psi = psi_vector(state, config, features)
    g_psi = np.zeros_like(psi)
    order = np.asarray(sample.order, dtype=np.int64)
    value = 0.0
    for position, negatives in enumerate(sample.negatives):
        if len(negatives) == 0:
            continue
        prefix = order[:position]
        n_alternatives = features.n_available - position - 1
        weight = sample.weight * n_alternatives / len(negatives)
        candidates = np.concatenate(([order[position]], negatives))
        utilities, lookahead = candidate_utilities(state, config, features, prefix, candidates, psi)
        diff = utilities[0] - utilities[1:]
        value += weight * log_expit(diff).sum()
        if grads is not None:
            g = weight * expit(-diff)
            coef = np.concatenate(([g.sum()], -g))
            _backprop_step(state, config, prefix, candidates, coef, lookahead, g_psi, grads)
    if grads is not None:
        _backprop_psi(state, config, features, g_psi, grads)
    return float(value)


def _chunk_bound(args) -> Tuple[float, Dict[str, np.ndarray]]:
    state, config, features, samples = args
    grads = state.zeros_like()
    value = 0.0
    for sample in samples:
        value += trip_bound(state, config, features[sample.trip_index], sample, grads)
    return value, grads


def likelihood_bound(
    state: LatentState,
    config: ModelConfig,
    features: Sequence[TripFeatures],
    minibatch: Minibatch,
    executor: Optional[Executor] = None,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Data term of the objective and its gradient.

    Samples are processed in fixed chunks and chunk results are summed in
    chunk order, so the result does not depend on the number of threads.
    """
    chunks = [
        (state, config, features, minibatch.samples[i:i + TRIP_CHUNK_SIZE])
        for i in range(0, len(minibatch.samples), TRIP_CHUNK_SIZE)
    ]
    results = executor.map(_chunk_bound, chunks) if executor is not None else map(_chunk_bound, chunks)
    value = 0.0
    grads = state.zeros_like()
    for chunk_value, chunk_grads in results:
        value += chunk_value
        for name, g in chunk_grads.items():
            grads[name] += g
    return value, grads


def _prior_std(config: ModelConfig, latent: str) -> float:
    return config.prior_std_season if latent in ("mu", "delta") else config.prior_std


def log_prior(state: LatentState, config: ModelConfig, active: Sequence[str]) -> Tuple[float, Dict[str, np.ndarray]]:
    """Log prior density of the active latents and its gradient."""
    value = 0.0
    grads = {}
    a0, b0 = config.gamma_prior_shape, config.gamma_prior_rate
    for latent in active:
        x = getattr(state, latent)
        if latent in GAUSSIAN_LATENTS:
            std = _prior_std(config, latent)
            value += float(np.sum(-_HALF_LOG_2PI - math.log(std) - 0.5 * (x / std) ** 2))
            grads[latent] = -x / std ** 2
        else:
            value += float(np.sum(a0 * math.log(b0) - gammaln(a0) + (a0 - 1.0) * np.log(x) - b0 * x))
            grads[latent] = (a0 - 1.0) / x - b0
    return value, grads


def log_q(state: LatentState, v: VariationalState, active: Sequence[str]) -> Tuple[float, Dict[str, np.ndarray]]:
    """Log variational density of the active latents and its gradient in the latents at fixed nu."""
    value = 0.0
    grads = {}
    for latent in active:
        x = getattr(state, latent)
        if latent in GAUSSIAN_LATENTS:
            mean, std = v.get(latent, "mean"), v.get(latent, "std")
            z = (x - mean) / std
            value += float(np.sum(-_HALF_LOG_2PI - np.log(std) - 0.5 * z ** 2))
            grads[latent] = -z / std
        else:
            shape, mean = v.get(latent, "shape"), v.get(latent, "mean")
            rate = shape / mean
            value += float(np.sum(shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x))
            grads[latent] = (shape - 1.0) / x - rate
    return value, grads


def evaluate_f(
    v: VariationalState,
    state: LatentState,
    config: ModelConfig,
    features: Sequence[TripFeatures],
    minibatch: Minibatch,
    executor: Optional[Executor] = None,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Objective value and gradient with respect to every latent for a fixed draw and subsample.

    Latents outside the config's active set get zero gradient.
    """
    active = active_latents(config)
    value, grads = likelihood_bound(state, config, features, minibatch, executor)
    prior_value, prior_grads = log_prior(state, config, active)
    q_value, q_grads = log_q(state, v, active)
    for latent in active:
        grads[latent] += prior_grads[latent] - q_grads[latent]
    return value + prior_value - q_value, grads


def estimate_f(
    v: VariationalState,
    draw: Tuple[LatentState, NoiseDraw],
    features: Sequence[TripFeatures],
    config: ModelConfig,
    opt: OptimizerConfig,
    rng: np.random.Generator,
    executor: Optional[Executor] = None,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Stochastic estimate of the objective for one latent draw: subsample, then evaluate."""
    minibatch = sample_minibatch(features, opt, rng)
    return evaluate_f(v, draw[0], config, features, minibatch, executor)


def exact_bound_objective(
    v: VariationalState,
    state: LatentState,
    config: ModelConfig,
    features: Sequence[TripFeatures],
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Objective with every trip, every ordering and every negative."""
    return evaluate_f(v, state, config, features, full_minibatch(features, config.exact_basket_cap))


def validation_bound(state: LatentState, config: ModelConfig, features: Sequence[TripFeatures]) -> float:
    """
    Average full one-vs-each bound per choice step along the recorded order.

    Used to monitor convergence; checkout steps are included.
    """
    if not features:
        return math.nan
    minibatch = recorded_order_minibatch(features)
    total = sum(trip_bound(state, config, features[s.trip_index], s) for s in minibatch.samples)
    steps = sum(len(s.order) for s in minibatch.samples)
    return total / steps
