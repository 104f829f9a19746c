"""
Market-basket data: registries, trips, CSV loading and splits.
"""
from .catalog import (
    Catalog,
    DatasetSplit,
    Trip,
    calendar_week,
    heldout_pairs,
    log_normalized_prices,
    month_of,
    normalized_log_price,
)
from .csv_loader import build_dataset, load_dataset, load_dataset_pair, write_dataset
from .splits import build_skewed_test_sets, price_deviation, split_dataset

__all__ = [
    'Catalog',
    'DatasetSplit',
    'Trip',
    'calendar_week',
    'heldout_pairs',
    'log_normalized_prices',
    'month_of',
    'normalized_log_price',
    'build_dataset',
    'load_dataset',
    'load_dataset_pair',
    'write_dataset',
    'build_skewed_test_sets',
    'price_deviation',
    'split_dataset',
]
