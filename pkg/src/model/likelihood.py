"""
Basket likelihoods: ordered (as recorded) and unordered (all orderings, checkout last).
"""
import itertools
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ..exceptions import BasketSizeError, DomainError
from ..ingestion.catalog import Catalog, Trip
from .config import ModelConfig
from .latent import LatentState, TripFeatures, trip_features
from .utility import log_choice_probabilities, psi_vector


def sequence_loglik(
    state: LatentState,
    config: ModelConfig,
    features: TripFeatures,
    order: Sequence[int],
    psi: Optional[np.ndarray] = None,
) -> float:
    """Sum of step log-probabilities of choosing `order` one item at a time."""
    if len(set(order)) != len(order):
        raise DomainError(f"repeated item in basket {list(order)}")
    if psi is None:
        psi = psi_vector(state, config, features)
    total = 0.0
    for step, item in enumerate(order):
        log_probs = log_choice_probabilities(state, config, features, order[:step], psi)
        if not np.isfinite(log_probs[item]):
            raise DomainError(f"item {item} cannot be chosen at step {step}")
        total += log_probs[item]
    return float(total)


def ordered_basket_loglik(state: LatentState, config: ModelConfig, catalog: Catalog, trip: Trip) -> float:
    """Log-likelihood of the basket in its recorded order."""
    return sequence_loglik(state, config, trip_features(catalog, trip), trip.items)


def basket_orderings(trip: Trip, cap: int):
    """Every ordering of the purchases with checkout appended."""
    if len(trip.purchases) > cap:
        raise BasketSizeError(
            f"trip {trip.trip_id} has {len(trip.purchases)} items; exact enumeration is limited "
            f"to {cap}. Use the variational bound for larger baskets."
        )
    checkout = trip.items[-1]
    for perm in itertools.permutations(trip.purchases):
        yield perm + (checkout,)


def permutation_logliks(state: LatentState, config: ModelConfig, catalog: Catalog, trip: Trip) -> np.ndarray:
    """Ordered log-likelihood of every ordering of the basket."""
    features = trip_features(catalog, trip)
    psi = psi_vector(state, config, features)
    return np.array([
        sequence_loglik(state, config, features, order, psi)
        for order in basket_orderings(trip, config.exact_basket_cap)
    ])


def unordered_basket_loglik_exact(state: LatentState, config: ModelConfig, catalog: Catalog, trip: Trip) -> float:
    """Log of the total probability of the basket over all orderings (checkout last)."""
    return float(logsumexp(permutation_logliks(state, config, catalog, trip)))
