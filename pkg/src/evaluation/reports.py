"""
CSV reports and printable tables.
"""
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import pandas as pd

from ..ingestion.catalog import Catalog
from .heldout import EvaluationResult
from .summary import PosteriorSummary

logger = logging.getLogger(__name__)

ALL_COLUMN = "All"


def config_hash(*parts: Mapping) -> str:
    """Short stable hash of configuration dicts."""
    payload = json.dumps(list(parts), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def write_report_csv(df: pd.DataFrame, path: Path, config_digest: str, seed: int) -> None:
    """Write a CSV preceded by a `# config_hash=..., seed=...` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# config_hash={config_digest}, seed={seed}\n")
        df.to_csv(f, index=False)
    logger.info(f"Wrote {len(df)} rows to {path}")


def read_report_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def skew_column(threshold: float) -> str:
    """Column label of a price-skewed test set, e.g. 0.025 -> 'Price +/-2.5%'."""
    return f"Price +/-{threshold * 100:g}%"


def evaluation_table(results: Mapping[str, Mapping[str, EvaluationResult]]) -> pd.DataFrame:
    """
    Wide table: one row per model, mean/std/count columns per test set.

    Args:
        results: model label -> column label -> result; columns keep insertion order
    """
    rows = []
    for label, columns in results.items():
        row = {"model": label}
        for column, result in columns.items():
            row[f"{column} mean"] = result.mean
            row[f"{column} std"] = result.std
            row[f"{column} count"] = result.count
            row[f"{column} skipped"] = result.skipped
        rows.append(row)
    return pd.DataFrame(rows)


def format_evaluation_table(results: Mapping[str, Mapping[str, EvaluationResult]]) -> str:
    """Printable table with `mean (std)` cells and pair counts in the header."""
    if not results:
        return ""
    first = next(iter(results.values()))
    headers = ["Model"] + [f"{column} (n={result.count})" for column, result in first.items()]
    lines: List[List[str]] = [headers]
    for label, columns in results.items():
        cells = [label]
        for result in columns.values():
            if result.count == 0 or math.isnan(result.mean):
                cells.append("n/a (empty)")
            else:
                cells.append(f"{result.mean:.3f} ({result.std:.3f})")
        lines.append(cells)
    widths = [max(len(line[i]) for line in lines) for i in range(len(headers))]
    rendered = ["  ".join(cell.ljust(width) for cell, width in zip(line, widths)) for line in lines]
    rendered.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(rendered)


def partner_table(
    catalog: Catalog,
    complements: Mapping[int, Sequence[Tuple[int, float]]],
    exchangeables: Mapping[int, Sequence[Tuple[int, float]]],
) -> pd.DataFrame:
    """
    One row per query item with its ranked complements and exchangeable partners.

    Columns: item, complement_1, complementarity_1, ..., exchangeable_1, exchangeability_1, ...
    """
    rows = []
    for item, ranked in complements.items():
        row = {"item": catalog.items[item]}
        for rank, (partner, value) in enumerate(ranked, start=1):
            row[f"complement_{rank}"] = catalog.items[partner]
            row[f"complementarity_{rank}"] = value
        for rank, (partner, value) in enumerate(exchangeables.get(item, []), start=1):
            row[f"exchangeable_{rank}"] = catalog.items[partner]
            row[f"exchangeability_{rank}"] = value
        rows.append(row)
    return pd.DataFrame(rows)


def pair_scores_frame(catalog: Catalog, scores: Dict[Tuple[int, int], float], score: str) -> pd.DataFrame:
    """Table `pair, <score>` with pairs written as `item_a|item_b`."""
    rows = [{"pair": f"{catalog.items[a]}|{catalog.items[b]}", score: value} for (a, b), value in scores.items()]
    return pd.DataFrame(rows, columns=["pair", score])


def export_item_vectors(summary: PosteriorSummary, catalog: Catalog) -> pd.DataFrame:
    """Posterior means of lambda, alpha and rho per item."""
    state = summary.state
    frame = pd.DataFrame({"item_id": list(catalog.items), "lambda": state.lam})
    alpha = pd.DataFrame(state.alpha, columns=[f"alpha_{k}" for k in range(state.alpha.shape[1])])
    rho = pd.DataFrame(state.rho, columns=[f"rho_{k}" for k in range(state.rho.shape[1])])
    return pd.concat([frame, alpha, rho], axis=1)
