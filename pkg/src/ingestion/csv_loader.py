"""
Load market-basket data from CSV files.

Formats (UTF-8, '.' decimal separator):
- trips file: trip_id,user_id,abs_week,item_id  (one row per purchase)
- prices file: abs_week,item_id,price  with an optional trip_id column;
  rows carrying a trip_id override the week-level price for that trip only
"""
import logging
import re
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd

from ..config import CHECKOUT_ID, TEST_WEEKS
from ..exceptions import DataError, EmptyDatasetError, MissingPriceError, ParseError
from .catalog import Catalog, Trip, calendar_week, month_of

logger = logging.getLogger(__name__)

TRIP_COLUMNS = ["trip_id", "user_id", "abs_week", "item_id"]
PRICE_COLUMNS = ["abs_week", "item_id", "price"]
PRICE_OPTIONAL_COLUMNS = ["trip_id"]

_LINE_PATTERN = re.compile(r"line (\d+)")


def _read_table(path: Path, required: Sequence[str], optional: Sequence[str] = ()) -> pd.DataFrame:
    """Read a CSV as strings and check its header."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError(f"{path} is empty") from None
    except pd.errors.ParserError as e:
        match = _LINE_PATTERN.search(str(e))
        raise ParseError(path, int(match.group(1)) if match else None, str(e)) from None

    columns = [c.strip() for c in df.columns]
    df.columns = columns
    missing = [c for c in required if c not in columns]
    unknown = [c for c in columns if c not in required and c not in optional]
    if missing or unknown:
        raise ParseError(
            path, 1,
            f"bad header {columns}: expected {list(required)} (optional {list(optional)})"
        )
    if df.empty:
        raise EmptyDatasetError(f"{path} has a header but no rows")

    # Line numbers as seen in the file (header is line 1)
    df["line"] = np.arange(len(df)) + 2
    return df


def _parse_numeric(df: pd.DataFrame, column: str, path: Path, integer: bool, positive: bool) -> pd.Series:
    values = pd.to_numeric(df[column].str.strip(), errors="coerce")
    bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=float))
    if integer:
        bad |= values.fillna(0) % 1 != 0
    if positive:
        bad |= values.fillna(0) <= 0
    if bad.any():
        row = df.loc[bad.idxmax()]
        kind = "positive " if positive else ""
        kind += "integer" if integer else "number"
        raise ParseError(path, int(row["line"]), f"{column}={row[column]!r} is not a {kind}")
    return values.astype(np.int64) if integer else values.astype(float)


def _parse_ids(df: pd.DataFrame, column: str, path: Path) -> pd.Series:
    values = df[column].str.strip()
    bad = (values == "") | (values == CHECKOUT_ID)
    if bad.any():
        row = df.loc[bad.idxmax()]
        raise ParseError(path, int(row["line"]), f"invalid {column} {row[column]!r}")
    return values


def read_trip_rows(path: Path) -> pd.DataFrame:
    """Read and type-check a trips file."""
    df = _read_table(path, TRIP_COLUMNS)
    df["trip_id"] = _parse_numeric(df, "trip_id", path, integer=True, positive=False)
    df["abs_week"] = _parse_numeric(df, "abs_week", path, integer=True, positive=True)
    df["user_id"] = _parse_ids(df, "user_id", path)
    df["item_id"] = _parse_ids(df, "item_id", path)
    logger.info(f"Read {len(df)} purchase rows from {path}")
    return df


def read_price_rows(path: Path) -> pd.DataFrame:
    """Read and type-check a prices file."""
    df = _read_table(path, PRICE_COLUMNS, PRICE_OPTIONAL_COLUMNS)
    df["abs_week"] = _parse_numeric(df, "abs_week", path, integer=True, positive=True)
    df["price"] = _parse_numeric(df, "price", path, integer=False, positive=True)
    df["item_id"] = _parse_ids(df, "item_id", path)
    if "trip_id" in df.columns:
        has_trip = df["trip_id"].str.strip() != ""
        trip_ids = pd.Series(-1, index=df.index, dtype=np.int64)
        if has_trip.any():
            trip_ids[has_trip] = _parse_numeric(
                df[has_trip], "trip_id", path, integer=True, positive=False
            )
        df["trip_id"] = trip_ids
        df["has_trip"] = has_trip
    else:
        df["trip_id"] = -1
        df["has_trip"] = False
    logger.info(f"Read {len(df)} price rows from {path}")
    return df


def rows_from_records(
    trip_records: Sequence[Tuple[int, str, int, str]],
    price_records: Sequence[Tuple[int, int, str, float]],
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Typed row frames from in-memory records, as read_trip_rows / read_price_rows return them.

    Args:
        trip_records: (trip_id, user_id, abs_week, item_id)
        price_records: (trip_id or None, abs_week, item_id, price)
    """
    trip_rows = pd.DataFrame(trip_records, columns=TRIP_COLUMNS)
    trip_rows["trip_id"] = trip_rows["trip_id"].astype(np.int64)
    trip_rows["abs_week"] = trip_rows["abs_week"].astype(np.int64)
    trip_rows["line"] = np.arange(len(trip_rows)) + 2

    price_rows = pd.DataFrame(price_records, columns=["trip_id", "abs_week", "item_id", "price"])
    price_rows["has_trip"] = price_rows["trip_id"].notna()
    price_rows["trip_id"] = price_rows["trip_id"].fillna(-1).astype(np.int64)
    price_rows["abs_week"] = price_rows["abs_week"].astype(np.int64)
    price_rows["price"] = price_rows["price"].astype(float)
    price_rows["line"] = np.arange(len(price_rows)) + 2
    return trip_rows, price_rows


def _group_trips(trip_rows: pd.DataFrame) -> "OrderedDict[int, dict]":
    """Collect purchase rows into trips, keeping first-appearance order."""
    trips: "OrderedDict[int, dict]" = OrderedDict()
    duplicates = 0
    for row in trip_rows.itertuples(index=False):
        record = trips.get(row.trip_id)
        if record is None:
            record = {"user_id": row.user_id, "abs_week": row.abs_week, "items": [], "seen": set()}
            trips[row.trip_id] = record
        elif record["user_id"] != row.user_id or record["abs_week"] != row.abs_week:
            raise DataError(
                f"trip {row.trip_id}: rows disagree on user or week (line {row.line})"
            )
        if row.item_id in record["seen"]:
            duplicates += 1
            continue
        record["seen"].add(row.item_id)
        record["items"].append(row.item_id)
    if duplicates:
        logger.warning(f"Collapsed {duplicates} repeated purchase rows (first occurrence kept)")
    return trips


def _accumulate(arrays: Iterable[np.ndarray], n_items: int) -> Tuple[np.ndarray, np.ndarray]:
    """Sum finite prices and count observations over (possibly shared) price vectors."""
    weights: Dict[int, List] = {}
    for array in arrays:
        entry = weights.get(id(array))
        if entry is None:
            weights[id(array)] = [array, 1]
        else:
            entry[1] += 1
    sums = np.zeros(n_items)
    counts = np.zeros(n_items)
    for array, weight in weights.values():
        finite = np.isfinite(array)
        sums += np.where(finite, array, 0.0) * weight
        counts += finite * weight
    return sums, counts


def build_dataset(
    trip_rows: pd.DataFrame,
    price_rows: pd.DataFrame,
    training_trip_ids: Optional[Set[int]] = None,
    price_cutoff_week: Optional[int] = None,
) -> Tuple[Catalog, List[Trip]]:
    """
    Build the catalog and trips from parsed rows.

    Args:
        trip_rows: Output of read_trip_rows
        price_rows: Output of read_price_rows
        training_trip_ids: Restrict mean-price statistics to these trips
        price_cutoff_week: Restrict mean-price statistics to trips up to this absolute week

    Returns:
        (Catalog, list of Trip) with checkout appended to every basket
    """
    item_ids = sorted(set(trip_rows["item_id"]) | set(price_rows["item_id"]))
    items = tuple(item_ids) + (CHECKOUT_ID,)
    users = tuple(sorted(set(trip_rows["user_id"])))
    item_index = {item: i for i, item in enumerate(items)}
    user_index = {user: u for u, user in enumerate(users)}
    n_items = len(items)
    checkout = n_items - 1

    # Week-level price vectors, shared by every trip of that week
    week_rows = price_rows[~price_rows["has_trip"]]
    week_prices: Dict[int, np.ndarray] = {}
    grouped = week_rows.groupby(["abs_week", "item_id"], sort=False)["price"].mean()
    for (abs_week, item_id), price in grouped.items():
        vector = week_prices.get(abs_week)
        if vector is None:
            vector = np.full(n_items, np.nan)
            vector[checkout] = 1.0
            week_prices[abs_week] = vector
        vector[item_index[item_id]] = price
    for vector in week_prices.values():
        vector.flags.writeable = False

    overrides: Dict[int, List[Tuple[int, float]]] = {}
    for row in price_rows[price_rows["has_trip"]].itertuples(index=False):
        overrides.setdefault(row.trip_id, []).append((item_index[row.item_id], row.price))

    empty_week = np.full(n_items, np.nan)
    empty_week[checkout] = 1.0
    empty_week.flags.writeable = False

    trips: List[Trip] = []
    for trip_id, record in _group_trips(trip_rows).items():
        abs_week = int(record["abs_week"])
        prices = week_prices.get(abs_week, empty_week)
        if trip_id in overrides:
            prices = prices.copy()
            for item, price in overrides[trip_id]:
                prices[item] = price
            prices.flags.writeable = False
        purchased = [item_index[item_id] for item_id in record["items"]]
        for item in purchased:
            if not np.isfinite(prices[item]):
                raise MissingPriceError(trip_id, items[item])
        trips.append(Trip(
            trip_id=int(trip_id),
            user=user_index[record["user_id"]],
            week=calendar_week(abs_week),
            absolute_week=abs_week,
            prices=prices,
            items=tuple(purchased) + (checkout,),
        ))

    if not trips:
        raise EmptyDatasetError("no trips in dataset")

    training = [
        t for t in trips
        if (training_trip_ids is None or t.trip_id in training_trip_ids)
        and (price_cutoff_week is None or t.absolute_week <= price_cutoff_week)
    ]
    sums, counts = _accumulate((t.prices for t in training), n_items)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_price = sums / counts
    # Items offered only in weeks without training trips fall back to their price rows
    fallback = price_rows.groupby("item_id")["price"].mean()
    for item_id, price in fallback.items():
        i = item_index[item_id]
        if counts[i] == 0:
            mean_price[i] = price
    mean_price[checkout] = 1.0

    n_months = max(month_of(t.absolute_week) for t in trips) + 1
    monthly = np.full((n_items, n_months), np.nan)
    by_month: Dict[int, List[np.ndarray]] = {}
    for t in trips:
        by_month.setdefault(month_of(t.absolute_week), []).append(t.prices)
    for month, arrays in by_month.items():
        sums, counts = _accumulate(arrays, n_items)
        with np.errstate(invalid="ignore", divide="ignore"):
            monthly[:, month] = sums / counts

    catalog = Catalog(items=items, users=users, mean_price=mean_price, monthly_mean_price=monthly)
    logger.info(
        f"Built dataset: {len(trips)} trips, {n_items - 1} items (+checkout), "
        f"{len(users)} users, {len(training)} trips in price statistics"
    )
    return catalog, trips


def _training_cutoff(trip_rows: pd.DataFrame) -> Optional[int]:
    weeks = trip_rows["abs_week"].unique()
    if len(weeks) > TEST_WEEKS:
        return int(weeks.max()) - TEST_WEEKS
    return None


def load_dataset(trips_path: Path, prices_path: Path) -> Tuple[Catalog, List[Trip]]:
    """
    Load a single dataset and compute price statistics over its training period.

    Args:
        trips_path: Purchases CSV
        prices_path: Prices CSV

    Returns:
        (Catalog, list of Trip)
    """
    trip_rows = read_trip_rows(trips_path)
    price_rows = read_price_rows(prices_path)
    return build_dataset(trip_rows, price_rows, price_cutoff_week=_training_cutoff(trip_rows))


def load_dataset_pair(
    train_paths: Tuple[Path, Path],
    test_paths: Tuple[Path, Path],
) -> Tuple[Catalog, List[Trip], List[Trip]]:
    """
    Load an explicit train/test layout into one catalog.

    Args:
        train_paths: (trips, prices) for training
        test_paths: (trips, prices) for testing

    Returns:
        (Catalog, training trips, test trips)
    """
    train_trips = read_trip_rows(train_paths[0])
    test_trips = read_trip_rows(test_paths[0])
    train_ids = set(train_trips["trip_id"])
    test_ids = set(test_trips["trip_id"])
    overlap = train_ids & test_ids
    if overlap:
        raise DataError(f"trip ids appear in both train and test files: {sorted(overlap)[:5]}")

    trip_rows = pd.concat([train_trips, test_trips], ignore_index=True)
    price_rows = pd.concat(
        [read_price_rows(train_paths[1]), read_price_rows(test_paths[1])], ignore_index=True
    )
    catalog, trips = build_dataset(trip_rows, price_rows, training_trip_ids=train_ids)
    train = [t for t in trips if t.trip_id in train_ids]
    test = [t for t in trips if t.trip_id in test_ids]
    return catalog, train, test


def write_dataset(catalog: Catalog, trips: Sequence[Trip], trips_path: Path, prices_path: Path) -> None:
    """
    Write trips and prices in the formats read by load_dataset.

    Weeks whose trips all share one price vector are written as week rows;
    otherwise every trip gets its own trip-level price rows.
    """
    trip_records = []
    for trip in trips:
        user_id = catalog.users[trip.user]
        for item in trip.purchases:
            trip_records.append((trip.trip_id, user_id, trip.absolute_week, catalog.items[item]))
    pd.DataFrame(trip_records, columns=TRIP_COLUMNS).to_csv(trips_path, index=False)

    by_week: "OrderedDict[int, List[Trip]]" = OrderedDict()
    for trip in trips:
        by_week.setdefault(trip.absolute_week, []).append(trip)

    price_records = []
    for abs_week, week_trips in by_week.items():
        shared = all(t.prices is week_trips[0].prices for t in week_trips)
        sources = [("", week_trips[0])] if shared else [(t.trip_id, t) for t in week_trips]
        for trip_id, trip in sources:
            for item in np.flatnonzero(np.isfinite(trip.prices)):
                if item == catalog.checkout:
                    continue
                price_records.append((trip_id, abs_week, catalog.items[item], repr(float(trip.prices[item]))))
    pd.DataFrame(price_records, columns=["trip_id"] + PRICE_COLUMNS).to_csv(prices_path, index=False)
    logger.info(f"Wrote {len(trips)} trips to {trips_path} and {len(price_records)} prices to {prices_path}")
