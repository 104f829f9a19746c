"""
In-memory market-basket dataset: item/user registries, trips and splits.
"""
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..config import CHECKOUT_ID, WEEKS_PER_MONTH, WEEKS_PER_YEAR
from ..exceptions import DomainError, UnknownIdError


def calendar_week(absolute_week: int) -> int:
    """Map an absolute week counter (1-based) to its calendar week in 1..52."""
    return ((absolute_week - 1) % WEEKS_PER_YEAR) + 1


def month_of(absolute_week: int) -> int:
    """Absolute month index (0-based) of an absolute week: weeks 1-4 are month 0."""
    return (absolute_week - 1) // WEEKS_PER_MONTH


@dataclass(frozen=True, eq=False)
class Catalog:
    """
    Item and user registries plus price statistics.

    Attributes:
        items: Item identifiers; the checkout item is always the last entry
        users: User identifiers
        mean_price: Per-item mean price over the training period (NaN if never priced)
        monthly_mean_price: Per-item, per-absolute-month mean price, shape (items, months)
    """
    items: Tuple[str, ...]
    users: Tuple[str, ...]
    mean_price: np.ndarray
    monthly_mean_price: np.ndarray
    _item_index: Dict[str, int] = field(init=False, repr=False)
    _user_index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.items or self.items[-1] != CHECKOUT_ID or self.items.count(CHECKOUT_ID) != 1:
            raise DomainError("catalog must end with exactly one checkout item")
        object.__setattr__(self, "_item_index", {item: i for i, item in enumerate(self.items)})
        object.__setattr__(self, "_user_index", {user: u for u, user in enumerate(self.users)})
        self.mean_price.flags.writeable = False
        self.monthly_mean_price.flags.writeable = False

    @property
    def checkout(self) -> int:
        return len(self.items) - 1

    @property
    def n_items(self) -> int:
        """Number of items including checkout."""
        return len(self.items)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_weeks(self) -> int:
        return WEEKS_PER_YEAR

    def item_index(self, item_id: str) -> int:
        try:
            return self._item_index[item_id]
        except KeyError:
            raise UnknownIdError(f"Unknown item: {item_id}") from None

    def user_index(self, user_id: str) -> int:
        try:
            return self._user_index[user_id]
        except KeyError:
            raise UnknownIdError(f"Unknown user: {user_id}") from None

    def has_item(self, item_id: str) -> bool:
        return item_id in self._item_index

    def monthly_mean(self, item: int, absolute_week: int) -> float:
        month = month_of(absolute_week)
        if month >= self.monthly_mean_price.shape[1]:
            return math.nan
        return float(self.monthly_mean_price[item, month])

    def fingerprint(self) -> str:
        """Hash of the index maps; checkpoints store it to detect mismatched data."""
        payload = json.dumps({"items": list(self.items), "users": list(self.users)})
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class Trip:
    """
    One shopping event.

    Attributes:
        trip_id: Identifier from the input file
        user: User index
        week: Calendar week in 1..52
        absolute_week: Absolute week counter used for chronological splits
        prices: Per-item price for this trip, NaN where the item is not offered
        items: Purchased item indices in recorded order, checkout last
    """
    trip_id: int
    user: int
    week: int
    absolute_week: int
    prices: np.ndarray
    items: Tuple[int, ...]

    @property
    def n_items(self) -> int:
        """Basket length including checkout."""
        return len(self.items)

    @property
    def purchases(self) -> Tuple[int, ...]:
        """Purchased items without the trailing checkout."""
        return self.items[:-1]


@dataclass(frozen=True)
class DatasetSplit:
    train: List[Trip]
    validation: List[Trip]
    test: List[Trip]


def normalized_log_price(catalog: Catalog, trip: Trip, item: int) -> float:
    """
    Log of the trip price divided by the item's mean price.

    Zero when the price equals its mean, so the price term of the utility
    vanishes at the average price.
    """
    price = float(trip.prices[item])
    mean = float(catalog.mean_price[item])
    if not math.isfinite(price) or price <= 0:
        raise DomainError(f"item {catalog.items[item]} has no positive price in trip {trip.trip_id}")
    if not math.isfinite(mean) or mean <= 0:
        raise DomainError(f"item {catalog.items[item]} has no positive mean price")
    return math.log(price / mean)


def log_normalized_prices(catalog: Catalog, trip: Trip) -> np.ndarray:
    """Vector form of normalized_log_price; NaN for items not offered in the trip."""
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.log(trip.prices / catalog.mean_price)
    values[~np.isfinite(values)] = np.nan
    return values


def heldout_pairs(trips: Sequence[Trip]) -> List[Tuple[Trip, int]]:
    """Every (trip, purchased item) pair, checkout excluded."""
    return [(trip, item) for trip in trips for item in trip.purchases]
