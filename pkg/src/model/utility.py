"""
Utilities and choice probabilities of the sequential choice model.

An item's utility at a step of the shopping trip is

    Psi(c | prefix) = psi_c + rho_c . mean(alpha[prefix]) [+ look-ahead]

with the per-trip mean utility

    psi_c = lambda_c + theta_u . alpha_c - (gamma_u . beta_c) log(r_c / mean_c) + delta_w . mu_c

and the look-ahead term the best utility reachable with one more item
(checkout included) after adding c to the basket. Items already in the
basket or not offered in the trip are excluded from the candidate set.
"""
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax

from ..exceptions import DomainError
from ..ingestion.catalog import Catalog, Trip, normalized_log_price
from .config import ModelConfig
from .latent import LatentState, TripFeatures, trip_features

# Candidates scored per block in the look-ahead, bounding the (pool x block) score matrix
_LOOKAHEAD_BLOCK = 1024


def psi_vector(state: LatentState, config: ModelConfig, features: TripFeatures) -> np.ndarray:
    """Mean utility psi of every item for one trip."""
    psi = state.lam.astype(float, copy=True)
    if config.use_preferences:
        psi += state.alpha @ state.theta[features.user]
    if config.use_price:
        tau = state.beta[state.item_group] @ state.gamma[features.user]
        psi -= tau * features.log_price
    if config.use_season:
        psi += state.mu[state.item_group] @ state.delta[features.week_row]
    return psi


def feasible_mask(features: TripFeatures, prefix: Sequence[int]) -> np.ndarray:
    """Items that may be chosen after `prefix`: offered in the trip and not yet in the basket."""
    feasible = features.available.copy()
    if len(prefix):
        feasible[np.asarray(prefix, dtype=np.int64)] = False
    return feasible


def lookahead_pool(psi: np.ndarray, feasible: np.ndarray, checkout: int,
                   top_m: Optional[int]) -> Tuple[np.ndarray, Optional[int]]:
    """
    Items considered as the next choice in the look-ahead term.

    Returns:
        (sorted pool of item indices, item to drop for checkout and for
        candidates outside the pool, or None when the pool is not capped)
    """
    pool = np.flatnonzero(feasible)
    if top_m is None:
        return pool, None
    others = pool[pool != checkout]
    if len(others) <= top_m:
        return pool, None
    keep = others[np.argsort(-psi[others], kind="stable")[: top_m + 1]]
    dropped = int(keep[top_m])
    pool = np.sort(np.append(keep, checkout)) if feasible[checkout] else np.sort(keep)
    return pool, dropped


def lookahead_terms(
    state: LatentState,
    psi: np.ndarray,
    feasible: np.ndarray,
    checkout: int,
    prefix: np.ndarray,
    candidates: np.ndarray,
    top_m: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Best next-step utility after adding each candidate to the basket.

    For candidate c with prefix of size m the term is
    max over c' in pool \\ {c} of psi_c' + rho_c' . (alpha_c + sum alpha[prefix]) / (m + 1).
    Ties go to the lowest item index.

    Returns:
        (values, argmax item per candidate); value 0 and argmax -1 when no
        look-ahead item remains
    """
    pool, dropped = lookahead_pool(psi, feasible, checkout, top_m)
    values = np.zeros(len(candidates))
    argmax = np.full(len(candidates), -1, dtype=np.int64)
    if len(pool) == 0:
        return values, argmax

    summed = state.alpha[prefix].sum(axis=0) if len(prefix) else np.zeros(state.alpha.shape[1])
    pool_psi = psi[pool][:, None]
    pool_rho = state.rho[pool]
    for start in range(0, len(candidates), _LOOKAHEAD_BLOCK):
        block = candidates[start:start + _LOOKAHEAD_BLOCK]
        v = (state.alpha[block] + summed) / (len(prefix) + 1)
        scores = pool_psi + pool_rho @ v.T
        scores[pool[:, None] == block[None, :]] = -np.inf
        if dropped is not None:
            outside = ~np.isin(block, pool) | (block == checkout)
            scores[np.ix_(pool == dropped, outside)] = -np.inf
        best = np.argmax(scores, axis=0)
        best_value = scores[best, np.arange(len(block))]
        found = np.isfinite(best_value)
        values[start:start + len(block)] = np.where(found, best_value, 0.0)
        argmax[start:start + len(block)] = np.where(found, pool[best], -1)
    return values, argmax


def candidate_utilities(
    state: LatentState,
    config: ModelConfig,
    features: TripFeatures,
    prefix: Sequence[int],
    candidates: np.ndarray,
    psi: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Full utilities of `candidates` after `prefix`.

    Returns:
        (utilities, look-ahead argmax per candidate or -1)
    """
    if psi is None:
        psi = psi_vector(state, config, features)
    prefix = np.asarray(prefix, dtype=np.int64)
    candidates = np.asarray(candidates, dtype=np.int64)

    values = psi[candidates].copy()
    if len(prefix):
        values += state.rho[candidates] @ state.alpha[prefix].mean(axis=0)
    argmax = np.full(len(candidates), -1, dtype=np.int64)
    if config.think_ahead:
        checkout = len(psi) - 1
        feasible = feasible_mask(features, prefix)
        extra, argmax = lookahead_terms(
            state, psi, feasible, checkout, prefix, candidates, config.lookahead_top_m
        )
        values += extra
    return values, argmax


def log_choice_probabilities(
    state: LatentState,
    config: ModelConfig,
    features: TripFeatures,
    prefix: Sequence[int],
    psi: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Log choice probability of every item after `prefix`; -inf for infeasible items."""
    feasible = feasible_mask(features, prefix)
    candidates = np.flatnonzero(feasible)
    if len(candidates) == 0:
        raise DomainError("no item left to choose")
    utilities, _ = candidate_utilities(state, config, features, prefix, candidates, psi)
    log_probs = np.full(len(feasible), -np.inf)
    log_probs[candidates] = log_softmax(utilities)
    return log_probs


def mean_utility_psi(state: LatentState, config: ModelConfig, catalog: Catalog, trip: Trip, item: int) -> float:
    """Mean utility psi of one item in one trip."""
    log_price = 0.0 if item == catalog.checkout else normalized_log_price(catalog, trip, item)
    user = trip.user
    value = float(state.lam[item])
    if config.use_preferences:
        value += float(state.theta[user] @ state.alpha[item])
    if config.use_price:
        group = state.item_group[item]
        value -= float(state.gamma[user] @ state.beta[group]) * log_price
    if config.use_season:
        group = state.item_group[item]
        value += float(state.delta[trip.week - 1] @ state.mu[group])
    return value


def interaction_utility(state: LatentState, item: int, basket_so_far: Sequence[int]) -> float:
    """
    rho_item . mean(alpha of the basket so far).

    Returns 0 for an empty basket and -inf when the item is already in the basket.
    """
    if item in basket_so_far:
        return -math.inf
    if not basket_so_far:
        return 0.0
    prefix = np.asarray(basket_so_far, dtype=np.int64)
    return float(state.rho[item] @ state.alpha[prefix].mean(axis=0))


def full_utility(
    state: LatentState,
    config: ModelConfig,
    catalog: Catalog,
    trip: Trip,
    item: int,
    basket_so_far: Sequence[int],
) -> float:
    """Utility of choosing `item` next, look-ahead included when enabled."""
    if item in basket_so_far:
        return -math.inf
    features = trip_features(catalog, trip)
    if not features.available[item]:
        raise DomainError(f"item {catalog.items[item]} is not offered in trip {trip.trip_id}")
    values, _ = candidate_utilities(state, config, features, basket_so_far, np.array([item]))
    return float(values[0])


def choice_distribution(
    state: LatentState,
    config: ModelConfig,
    catalog: Catalog,
    trip: Trip,
    basket_so_far: Sequence[int],
) -> np.ndarray:
    """
    Probability of each item being chosen next.

    Items in the basket or not offered in the trip have probability 0.
    """
    features = trip_features(catalog, trip)
    return np.exp(log_choice_probabilities(state, config, features, basket_so_far))


def interaction_asymmetry(state: LatentState) -> float:
    """Largest |rho_c . alpha_c' - rho_c' . alpha_c| over purchasable item pairs."""
    products = state.rho[:-1] @ state.alpha[:-1].T
    if products.size == 0:
        return 0.0
    return float(np.abs(products - products.T).max())
