"""
Illustrative shopping world with two customer segments and two complementary pairs.

New parents buy coffee and diapers, students buy ramen and candy; each is
bought with high probability at the low price and rarely when marked up.
Every customer buys exactly one complementary pair per trip (hot dogs with
buns, or taco shells with seasoning), avoiding the pair with a marked-up item.
"""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import numpy as np
import pandas as pd

from ..config import CHECKOUT_ID, WEEKS_PER_YEAR
from ..exceptions import ConfigError
from ..ingestion.catalog import Catalog, Trip, calendar_week
from ..ingestion.csv_loader import PRICE_COLUMNS, TRIP_COLUMNS, build_dataset, rows_from_records

logger = logging.getLogger(__name__)

PREFERENCE_ITEMS = ("coffee", "diapers", "ramen", "candy")
PAIR_ITEMS = ("hot_dogs", "hot_dog_buns", "taco_shells", "taco_seasoning")
ITEMS = PREFERENCE_ITEMS + PAIR_ITEMS
SEGMENTS = ("new_parent", "student")
SEGMENT_ITEMS = {"new_parent": ("coffee", "diapers"), "student": ("ramen", "candy")}

TRAIN_FILES = ("train_trips.csv", "train_prices.csv")
TEST_FILES = ("test_trips.csv", "test_prices.csv")


@dataclass
class ToyWorldConfig:
    n_customers_per_segment: int = 50
    n_trips_per_customer: int = 1000
    n_test_trips_per_customer: int = 30
    p_markup_preference: float = 0.4
    p_markup_pair: float = 0.6
    p_markup_preference_test: float = 0.95
    p_markup_pair_test: float = 1.0
    p_buy_preferred_low: float = 0.95
    p_buy_preferred_high: float = 0.1
    p_pair_balanced: float = 0.5
    p_pair_cheap: float = 0.85
    p_pair_expensive: float = 0.15
    low_price: float = 1.0
    high_price: float = 2.0
    rng_seed: int = 0

    def validate(self) -> "ToyWorldConfig":
        for name in ("n_customers_per_segment", "n_trips_per_customer", "n_test_trips_per_customer"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name, value in asdict(self).items():
            if name.startswith("p_") and not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be a probability, got {value}")
        if not 0 < self.low_price < self.high_price:
            raise ConfigError(f"need 0 < low_price < high_price, got {self.low_price} / {self.high_price}")
        return self

    def to_dict(self) -> Dict:
        return asdict(self)


def customer_ids(cfg: ToyWorldConfig) -> List[Tuple[str, str]]:
    """(user id, segment) for every customer, segment-major."""
    return [
        (f"{segment}_{i:03d}", segment)
        for segment in SEGMENTS
        for i in range(cfg.n_customers_per_segment)
    ]


def simulate_records(
    cfg: ToyWorldConfig,
    n_trips_per_customer: int,
    p_markup_preference: float,
    p_markup_pair: float,
    rng: np.random.Generator,
    first_trip_id: int = 0,
    first_week: int = 1,
) -> Tuple[list, list]:
    """
    Simulate trips for every customer.

    Returns:
        (trip records (trip_id, user_id, abs_week, item_id),
         price records (trip_id, abs_week, item_id, price))
    """
    customers = customer_ids(cfg)
    n = len(customers) * n_trips_per_customer
    customer = np.repeat(np.arange(len(customers)), n_trips_per_customer)
    position = np.tile(np.arange(n_trips_per_customer), len(customers))
    rows = np.arange(n)

    preference_markup = rng.random((n, len(PREFERENCE_ITEMS))) < p_markup_preference
    pair_marked = rng.random(n) < p_markup_pair
    pair_choice = rng.integers(0, len(PAIR_ITEMS), size=n)
    pair_markup = np.zeros((n, len(PAIR_ITEMS)), dtype=bool)
    pair_markup[rows[pair_marked], pair_choice[pair_marked]] = True
    prices = np.where(np.hstack([preference_markup, pair_markup]), cfg.high_price, cfg.low_price)

    is_student = customer >= cfg.n_customers_per_segment
    own_items = np.where(is_student[:, None], [2, 3], [0, 1])
    own_marked = preference_markup[rows[:, None], own_items]
    p_buy = np.where(own_marked, cfg.p_buy_preferred_high, cfg.p_buy_preferred_low)
    buys = rng.random((n, 2)) < p_buy

    hot_dogs_marked = pair_markup[:, 0] | pair_markup[:, 1]
    tacos_marked = pair_markup[:, 2] | pair_markup[:, 3]
    p_hot_dogs = np.where(
        hot_dogs_marked, cfg.p_pair_expensive,
        np.where(tacos_marked, cfg.p_pair_cheap, cfg.p_pair_balanced),
    )
    hot_dogs = rng.random(n) < p_hot_dogs

    trip_records = []
    price_records = []
    for k in range(n):
        trip_id = first_trip_id + k
        user_id = customers[customer[k]][0]
        abs_week = first_week + int(position[k]) % WEEKS_PER_YEAR
        basket = [int(own_items[k, j]) for j in range(2) if buys[k, j]]
        basket += [4, 5] if hot_dogs[k] else [6, 7]
        for item in rng.permutation(basket):
            trip_records.append((trip_id, user_id, abs_week, ITEMS[item]))
        for item, price in enumerate(prices[k]):
            price_records.append((trip_id, abs_week, ITEMS[item], float(price)))
    return trip_records, price_records


def _simulate_all(cfg: ToyWorldConfig):
    cfg.validate()
    train_seed, test_seed = np.random.SeedSequence(cfg.rng_seed).spawn(2)
    train = simulate_records(
        cfg, cfg.n_trips_per_customer, cfg.p_markup_preference, cfg.p_markup_pair,
        np.random.default_rng(train_seed),
    )
    last_week = min(cfg.n_trips_per_customer, WEEKS_PER_YEAR)
    n_train = len(customer_ids(cfg)) * cfg.n_trips_per_customer
    test = simulate_records(
        cfg, cfg.n_test_trips_per_customer, cfg.p_markup_preference_test, cfg.p_markup_pair_test,
        np.random.default_rng(test_seed), first_trip_id=n_train, first_week=last_week + 1,
    )
    return train, test, n_train


def generate_toy_dataset(cfg: ToyWorldConfig) -> Tuple[Catalog, List[Trip], List[Trip]]:
    """
    Training world and intervention test trips over one catalog.

    Mean prices come from the training trips only.

    Returns:
        (catalog, training trips, intervention trips)
    """
    (train_trips, train_prices), (test_trips, test_prices), n_train = _simulate_all(cfg)
    trip_rows, price_rows = rows_from_records(train_trips + test_trips, train_prices + test_prices)
    catalog, trips = build_dataset(trip_rows, price_rows, training_trip_ids=set(range(n_train)))
    train = [t for t in trips if t.trip_id < n_train]
    test = [t for t in trips if t.trip_id >= n_train]
    logger.info(f"Toy world: {len(train)} training trips, {len(test)} intervention trips")
    return catalog, train, test


def generate_world(cfg: ToyWorldConfig) -> Tuple[Catalog, List[Trip]]:
    catalog, train, _ = generate_toy_dataset(cfg)
    return catalog, train


def generate_intervention_test(cfg: ToyWorldConfig) -> Tuple[Catalog, List[Trip]]:
    """Intervention trips: preference items almost always and one pair item always marked up."""
    catalog, _, test = generate_toy_dataset(cfg)
    return catalog, test


def scenario_trip(
    catalog: Catalog,
    cfg: ToyWorldConfig,
    user_id: str,
    marked_up: Iterable[str],
    absolute_week: int = 1,
) -> Trip:
    """An empty-basket trip for `user_id` with the named items at the high price."""
    prices = np.full(catalog.n_items, cfg.low_price)
    for item_id in marked_up:
        prices[catalog.item_index(item_id)] = cfg.high_price
    prices[catalog.checkout] = 1.0
    return Trip(
        trip_id=-1,
        user=catalog.user_index(user_id),
        week=calendar_week(absolute_week),
        absolute_week=absolute_week,
        prices=prices,
        items=(catalog.checkout,),
    )


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_world(out_dir: Path, cfg: ToyWorldConfig) -> Dict:
    """
    Write training and intervention CSVs plus manifest.json.

    Returns:
        The manifest
    """
    (train_trips, train_prices), (test_trips, test_prices), _ = _simulate_all(cfg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    files = {}
    for (trips_name, prices_name), (trip_records, price_records) in (
        (TRAIN_FILES, (train_trips, train_prices)),
        (TEST_FILES, (test_trips, test_prices)),
    ):
        trips_path, prices_path = out_dir / trips_name, out_dir / prices_name
        pd.DataFrame(trip_records, columns=TRIP_COLUMNS).to_csv(trips_path, index=False)
        pd.DataFrame(price_records, columns=["trip_id"] + PRICE_COLUMNS).to_csv(prices_path, index=False)
        files[trips_name] = _file_digest(trips_path)
        files[prices_name] = _file_digest(prices_path)

    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.rng_seed,
        "items": sorted(ITEMS) + [CHECKOUT_ID],
        "n_train_trips": len({r[0] for r in train_trips}),
        "n_test_trips": len({r[0] for r in test_trips}),
        "files": files,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    logger.info(f"Wrote toy world to {out_dir}")
    return manifest
