"""
Held-out predictive log-likelihoods with bootstrap standard deviations.

Every score conditions on the items of the same basket; seasonal effects
use the calendar week, which for test weeks is the same week a year before.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..config import BOOTSTRAP_RESAMPLES
from ..exceptions import DomainError
from ..ingestion.catalog import Catalog, Trip
from ..model.config import ModelConfig
from ..model.latent import TripFeatures, trip_features
from ..model.utility import log_choice_probabilities, psi_vector
from .summary import PosteriorSummary

logger = logging.getLogger(__name__)

MODES = ("triplets", "basket", "trip")


@dataclass(frozen=True)
class EvaluationResult:
    """
    Mean held-out log-likelihood with bootstrap standard deviation.

    Attributes:
        mean: Average log-likelihood per item, or per trip in "trip" mode (NaN when count is 0)
        std: Bootstrap standard deviation of the mean
        count: Number of scored units (purchases or baskets)
        skipped: Units skipped (baskets too small for the mode)
    """
    mean: float
    std: float
    count: int
    skipped: int = 0


def bootstrap(values: Sequence[float], seed: int, resamples: int = BOOTSTRAP_RESAMPLES) -> Tuple[float, float]:
    """Mean and seeded bootstrap standard deviation of the mean."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, values.size, size=(resamples, values.size))
    return float(values.mean()), float(values[picks].mean(axis=1).std())


class _FeatureCache:
    """Trip features and psi vectors reused across targets of the same trip."""

    def __init__(self, summary: PosteriorSummary, config: ModelConfig, catalog: Catalog):
        self.summary = summary
        self.config = config
        self.catalog = catalog
        self._cache: Dict[int, Tuple[TripFeatures, np.ndarray]] = {}

    def get(self, trip: Trip) -> Tuple[TripFeatures, np.ndarray]:
        key = id(trip)
        if key not in self._cache:
            features = trip_features(self.catalog, trip)
            self._cache[key] = (features, psi_vector(self.summary.state, self.config, features))
        return self._cache[key]

    def log_prob(self, trip: Trip, prefix: Sequence[int], target: int) -> float:
        features, psi = self.get(trip)
        log_probs = log_choice_probabilities(self.summary.state, self.config, features, prefix, psi)
        return float(log_probs[target])


def conditional_logliks(
    summary: PosteriorSummary,
    config: ModelConfig,
    catalog: Catalog,
    pairs: Sequence[Tuple[Trip, int]],
) -> np.ndarray:
    """Per-pair log-probability of the target given the other purchases in recorded order."""
    cache = _FeatureCache(summary, config, catalog)
    values = np.empty(len(pairs))
    for k, (trip, target) in enumerate(pairs):
        if target not in trip.items:
            raise DomainError(f"item {catalog.items[target]} is not in trip {trip.trip_id}")
        context = [item for item in trip.purchases if item != target]
        values[k] = cache.log_prob(trip, context, target)
    return values


def heldout_conditional_loglik(
    summary: PosteriorSummary,
    config: ModelConfig,
    catalog: Catalog,
    pairs: Sequence[Tuple[Trip, int]],
    seed: int = 0,
    resamples: int = BOOTSTRAP_RESAMPLES,
) -> EvaluationResult:
    """
    Average log-probability of each held-out item given the rest of its basket.

    Args:
        pairs: (trip, target item) pairs
        seed: Bootstrap seed
        resamples: Bootstrap resamples

    Returns:
        EvaluationResult over pairs
    """
    values = conditional_logliks(summary, config, catalog, pairs)
    mean, std = bootstrap(values, seed, resamples)
    logger.info(f"Conditional log-lik over {len(values)} purchases: {mean:.4f} +/- {std:.4f}")
    return EvaluationResult(mean=mean, std=std, count=len(values))


def basket_logliks(
    summary: PosteriorSummary,
    config: ModelConfig,
    catalog: Catalog,
    trips: Sequence[Trip],
    mode: str,
) -> Tuple[List[float], int]:
    """
    Per-basket log-likelihood.

    In "triplets" mode the first three purchases are scored one after the
    other, conditioned on the remaining purchases; baskets with fewer than
    three purchases are skipped. In "basket" mode every purchase is scored
    in recorded order starting from an empty basket. Both return the average
    per scored item. "trip" mode scores the whole recorded sequence, checkout
    included, and returns its sum.

    Returns:
        (per-basket values, number of skipped baskets)
    """
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}; expected one of {MODES}")
    cache = _FeatureCache(summary, config, catalog)
    values = []
    skipped = 0
    for trip in trips:
        purchases = list(trip.purchases)
        if mode == "triplets":
            if len(purchases) < 3:
                skipped += 1
                continue
            scored, prefix = purchases[:3], purchases[3:]
        elif mode == "trip":
            scored, prefix = list(trip.items), []
        else:
            if not purchases:
                skipped += 1
                continue
            scored, prefix = purchases, []
        total = 0.0
        for item in scored:
            total += cache.log_prob(trip, prefix, item)
            prefix = prefix + [item]
        values.append(total if mode == "trip" else total / len(scored))
    return values, skipped


def heldout_basket_loglik(
    summary: PosteriorSummary,
    config: ModelConfig,
    catalog: Catalog,
    trips: Sequence[Trip],
    mode: str,
    seed: int = 0,
    resamples: int = BOOTSTRAP_RESAMPLES,
) -> EvaluationResult:
    """Multi-item held-out score ("triplets", "basket" or "trip"), averaged over baskets."""
    values, skipped = basket_logliks(summary, config, catalog, trips, mode)
    mean, std = bootstrap(values, seed, resamples)
    if skipped:
        logger.info(f"Skipped {skipped} baskets too small for mode {mode}")
    return EvaluationResult(mean=mean, std=std, count=len(values), skipped=skipped)
