"""
Chronological train/validation/test splits and price-skewed test sets.
"""
import logging
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..config import TEST_WEEKS, VALIDATION_FRACTION
from ..exceptions import DomainError, SplitError
from .catalog import Catalog, DatasetSplit, Trip

logger = logging.getLogger(__name__)


def split_dataset(
    trips: Sequence[Trip],
    seed: int,
    test_weeks: int = TEST_WEEKS,
    validation_fraction: float = VALIDATION_FRACTION,
) -> DatasetSplit:
    """
    Split trips into train, validation and test sets.

    The test set holds every trip in the final `test_weeks` absolute weeks.
    A seeded random fraction of the remaining trips becomes the validation set.
    All three lists keep the input order.

    Args:
        trips: Trips to split
        seed: Seed for the validation draw
        test_weeks: Length of the test window (0 disables the test split)
        validation_fraction: Fraction of non-test trips held out for validation

    Returns:
        DatasetSplit
    """
    if not trips:
        raise SplitError("cannot split an empty trip list")
    if not 0.0 <= validation_fraction < 1.0:
        raise DomainError(f"validation_fraction must be in [0, 1), got {validation_fraction}")

    weeks = {t.absolute_week for t in trips}
    if test_weeks > 0 and len(weeks) < test_weeks + 1:
        raise SplitError(
            f"need at least {test_weeks + 1} distinct weeks for a {test_weeks}-week test window, "
            f"got {len(weeks)}"
        )

    cutoff = max(weeks) - test_weeks
    test = [t for t in trips if t.absolute_week > cutoff]
    remaining = [t for t in trips if t.absolute_week <= cutoff]

    n_validation = int(round(validation_fraction * len(remaining)))
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(len(remaining), size=n_validation, replace=False).tolist())
    validation = [t for i, t in enumerate(remaining) if i in chosen]
    train = [t for i, t in enumerate(remaining) if i not in chosen]

    logger.info(
        f"Split {len(trips)} trips: {len(train)} train, {len(validation)} validation, "
        f"{len(test)} test (weeks > {cutoff})"
    )
    return DatasetSplit(train=train, validation=validation, test=test)


def price_deviation(catalog: Catalog, trip: Trip, item: int) -> float:
    """Fractional deviation of the trip price from the item's monthly mean."""
    monthly = catalog.monthly_mean(item, trip.absolute_week)
    price = float(trip.prices[item])
    if not math.isfinite(monthly) or monthly <= 0:
        return math.nan
    return abs(price / monthly - 1.0)


def build_skewed_test_sets(
    split: DatasetSplit,
    catalog: Catalog,
    thresholds: Sequence[float],
) -> Dict[float, List[Tuple[Trip, int]]]:
    """
    Select test purchases whose price lies outside a band around the monthly mean.

    Args:
        split: Dataset split; only its test trips are used
        catalog: Catalog holding the monthly mean prices
        thresholds: Fractional band half-widths, e.g. 0.05 for +/-5%

    Returns:
        Mapping threshold -> list of (trip, purchased item) pairs
    """
    for x in thresholds:
        if not x > 0:
            raise DomainError(f"skew threshold must be positive, got {x}")

    deviations = [
        (trip, item, price_deviation(catalog, trip, item))
        for trip in split.test
        for item in trip.purchases
    ]
    skewed = {
        x: [(trip, item) for trip, item, dev in deviations if dev > x]
        for x in thresholds
    }
    for x, pairs in skewed.items():
        logger.info(f"Skewed test set +/-{x:.1%}: {len(pairs)} of {len(deviations)} purchases")
    return skewed
