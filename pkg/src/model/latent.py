"""
Latent variables of the choice model and per-trip precomputed features.
"""
from dataclasses import dataclass, fields
from typing import Dict, Iterator, Tuple

import numpy as np

from ..config import WEEKS_PER_YEAR
from ..exceptions import ConfigError
from ..ingestion.catalog import Catalog, Trip
from .config import ModelConfig

GAUSSIAN_LATENTS = ("rho", "alpha", "lam", "theta", "mu", "delta")
GAMMA_LATENTS = ("gamma", "beta")
LATENT_NAMES = ("rho", "alpha", "lam", "theta", "gamma", "beta", "mu", "delta")


@dataclass
class LatentState:
    """
    One concrete value of every latent variable.

    Attributes:
        rho: Interaction coefficients, (items, k_items)
        alpha: Item attributes, (items, k_items)
        lam: Item popularity, (items,)
        theta: User preferences, (users, k_items)
        gamma: User price sensitivities, nonnegative, (users, k_price)
        beta: Price factors per item group, nonnegative, (groups, k_price)
        mu: Seasonal factors per item group, (groups, k_season)
        delta: Week factors, (52, k_season)
        item_group: Row of beta and mu used by each item, (items,)
    """
    rho: np.ndarray
    alpha: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    mu: np.ndarray
    delta: np.ndarray
    item_group: np.ndarray

    def arrays(self) -> Iterator[Tuple[str, np.ndarray]]:
        for name in LATENT_NAMES:
            yield name, getattr(self, name)

    def replace(self, **arrays: np.ndarray) -> "LatentState":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(arrays)
        return LatentState(**values)

    def zeros_like(self) -> Dict[str, np.ndarray]:
        """Zero-filled gradient buffers keyed by latent name."""
        return {name: np.zeros_like(value) for name, value in self.arrays()}


@dataclass(frozen=True)
class TripFeatures:
    """
    Per-trip quantities shared by every utility evaluation of the trip.

    Attributes:
        trip: The trip
        user: User index
        week_row: Row of delta for the trip's calendar week
        log_price: Log normalized price per item, 0 for items not offered
        available: Items that can be chosen in this trip (checkout always)
    """
    trip: Trip
    user: int
    week_row: int
    log_price: np.ndarray
    available: np.ndarray

    @property
    def n_available(self) -> int:
        return int(self.available.sum())


def trip_features(catalog: Catalog, trip: Trip) -> TripFeatures:
    with np.errstate(invalid="ignore", divide="ignore"):
        log_price = np.log(trip.prices / catalog.mean_price)
    available = np.isfinite(log_price)
    available[catalog.checkout] = True
    log_price[~available] = 0.0
    log_price[catalog.checkout] = 0.0
    return TripFeatures(
        trip=trip,
        user=trip.user,
        week_row=trip.week - 1,
        log_price=log_price,
        available=available,
    )


def active_latents(config: ModelConfig) -> Tuple[str, ...]:
    """Latents that enter the utility under the config's feature flags."""
    active = ["rho", "alpha", "lam"]
    if config.use_preferences:
        active.append("theta")
    if config.use_price:
        active.extend(["gamma", "beta"])
    if config.use_season:
        active.extend(["mu", "delta"])
    return tuple(active)


def resolve_item_groups(config: ModelConfig, catalog: Catalog) -> Tuple[np.ndarray, int]:
    """
    Map every item to a row of beta and mu.

    Without tie groups every item is its own group. With tie groups, items
    sharing a group name share a row; ungrouped items and checkout get
    singleton rows.

    Returns:
        (item_group array, number of groups)
    """
    if not config.tie_groups:
        return np.arange(catalog.n_items), catalog.n_items

    unknown = [item for item in config.tie_groups if not catalog.has_item(item)]
    if unknown:
        raise ConfigError(f"tie groups name unknown items: {sorted(unknown)[:5]}")

    rows: Dict[str, int] = {}
    item_group = np.empty(catalog.n_items, dtype=np.int64)
    for index, item_id in enumerate(catalog.items):
        key = config.tie_groups.get(item_id) if index != catalog.checkout else None
        if key is None:
            key = f"\0{item_id}"
        item_group[index] = rows.setdefault(key, len(rows))
    return item_group, len(rows)


def latent_shapes(config: ModelConfig, n_items: int, n_users: int, n_groups: int) -> Dict[str, Tuple[int, ...]]:
    return {
        "rho": (n_items, config.k_items),
        "alpha": (n_items, config.k_items),
        "lam": (n_items,),
        "theta": (n_users, config.k_items),
        "gamma": (n_users, config.k_price),
        "beta": (n_groups, config.k_price),
        "mu": (n_groups, config.k_season),
        "delta": (WEEKS_PER_YEAR, config.k_season),
    }
