"""
Command-line interface for fitting and analysing the shopping choice model.
"""
import argparse
import difflib
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.config import DEFAULT_SKEW_THRESHOLDS, LOG_FORMAT, LOG_LEVEL
from src.exceptions import CatalogMismatchError, DegenerateVectorError, OptimizationError, ShopperError
from src.evaluation.heldout import MODES, EvaluationResult, heldout_basket_loglik, heldout_conditional_loglik
from src.evaluation.metrics import complementarity_matrix, rank_complements, rank_exchangeable, similar_items
from src.evaluation.reports import (
    ALL_COLUMN,
    config_hash,
    evaluation_table,
    export_item_vectors,
    format_evaluation_table,
    pair_scores_frame,
    partner_table,
    skew_column,
    write_report_csv,
)
from src.evaluation.summary import summarize
from src.inference.checkpoint import catalog_from_header, load_checkpoint, save_checkpoint, verify_catalog
from src.inference.trainer import fit, trace_frame
from src.ingestion.catalog import Catalog, DatasetSplit, heldout_pairs
from src.ingestion.csv_loader import load_dataset, load_dataset_pair
from src.ingestion.splits import build_skewed_test_sets, split_dataset
from src.run_config import RunConfig, load_run_config
from src.simulation.toy_world import TEST_FILES, TRAIN_FILES, write_world

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OPTIMIZATION = 3
EXIT_COMPATIBILITY = 4

SINGLE_FILES = ("trips.csv", "prices.csv")


def setup_logging(level: str = LOG_LEVEL):
    """Configure logging."""
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format=LOG_FORMAT,
        handlers=[
            logging.StreamHandler(sys.stdout)
        ]
    )


def subsystem_seeds(seed: int, n: int) -> List[int]:
    """Independent integer seeds derived from one root seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def load_data_dir(data_dir: Path, seed: int) -> Tuple[Catalog, DatasetSplit]:
    """
    Load a data directory and split it.

    Two layouts are accepted: train_/test_ trips and prices files (the test
    files form the test set), or a single trips.csv / prices.csv pair split
    chronologically.
    """
    data_dir = Path(data_dir)
    if (data_dir / TRAIN_FILES[0]).exists():
        catalog, train, test = load_dataset_pair(
            (data_dir / TRAIN_FILES[0], data_dir / TRAIN_FILES[1]),
            (data_dir / TEST_FILES[0], data_dir / TEST_FILES[1]),
        )
        split = split_dataset(train, seed, test_weeks=0)
        return catalog, DatasetSplit(train=split.train, validation=split.validation, test=test)
    if (data_dir / SINGLE_FILES[0]).exists():
        catalog, trips = load_dataset(data_dir / SINGLE_FILES[0], data_dir / SINGLE_FILES[1])
        return catalog, split_dataset(trips, seed)
    raise FileNotFoundError(
        f"{data_dir}: expected {TRAIN_FILES[0]} (with {TRAIN_FILES[1]}, {TEST_FILES[0]}, "
        f"{TEST_FILES[1]}) or {SINGLE_FILES[0]} with {SINGLE_FILES[1]}"
    )


def _require(value, flag: str):
    if value is None:
        raise FileNotFoundError(f"no path given: pass {flag} or set it in the [paths] section")
    return Path(value)


def _prepare_output(path: Path) -> Path:
    """Create the parent directory of an output file and check it can be written."""
    path = Path(path)
    if path.is_dir():
        raise ShopperError(f"output path {path} is a directory")
    path.parent.mkdir(parents=True, exist_ok=True)
    if not os.access(path.parent, os.W_OK):
        raise ShopperError(f"cannot write to {path.parent}")
    return path


def _resolve_item(catalog: Catalog, item_id: str) -> int:
    if item_id == catalog.items[catalog.checkout]:
        raise ShopperError("the checkout item cannot be queried")
    if not catalog.has_item(item_id):
        close = difflib.get_close_matches(item_id, catalog.items[:-1], n=5)
        hint = f"; did you mean: {', '.join(close)}" if close else ""
        raise ShopperError(f"unknown item '{item_id}'{hint}")
    return catalog.item_index(item_id)


def simulate_command(args, config: RunConfig) -> int:
    """Handle the simulate command."""
    logger = logging.getLogger(__name__)
    if args.seed is not None:
        config.simulate.rng_seed = args.seed
    out_dir = _require(args.out or config.paths.out, "--out")

    logger.info(f"Simulating toy world into {out_dir}")
    manifest = write_world(out_dir, config.simulate)

    print("\n" + "="*60)
    print("Simulation Complete!")
    print(f"  ✓ Training trips: {manifest['n_train_trips']}")
    print(f"  ✓ Intervention trips: {manifest['n_test_trips']}")
    print(f"  Output: {out_dir}")
    print("="*60)
    return EXIT_OK


def fit_command(args, config: RunConfig) -> int:
    """Handle the fit command."""
    logger = logging.getLogger(__name__)
    opt = config.optimizer
    if args.seed is not None:
        opt.rng_seed = args.seed
    if args.threads is not None:
        opt.threads = args.threads
    if args.max_iterations is not None:
        opt.max_iterations = args.max_iterations
    opt.validate()

    data_dir = _require(args.data_dir or config.paths.data_dir, "--data-dir")
    checkpoint = _require(args.checkpoint or config.paths.checkpoint, "--checkpoint")
    trace_path = Path(args.out) if args.out else checkpoint.with_suffix(".trace.csv")
    _prepare_output(checkpoint)
    _prepare_output(trace_path)

    split_seed, fit_seed = subsystem_seeds(opt.rng_seed, 2)
    catalog, split = load_data_dir(data_dir, split_seed)
    root_seed = opt.rng_seed
    opt.rng_seed = fit_seed
    digest = config_hash(config.model.to_dict(), opt.to_dict())

    logger.info(f"Fitting {config.model.label()} on {data_dir}")
    state, trace = fit(catalog, split.train, split.validation, config.model, opt)
    save_checkpoint(checkpoint, state, config.model, catalog, root_seed,
                    extra={"config_hash": digest, "iterations": len(trace)})
    write_report_csv(trace_frame(trace), trace_path, digest, root_seed)

    final = trace[-1].validation_loglik if trace else float("nan")
    print("\n" + "="*60)
    print("Fit Complete!")
    print(f"  ✓ Iterations: {len(trace)}")
    print(f"  ✓ Final validation log-lik: {final:.4f}")
    print(f"  Checkpoint: {checkpoint}")
    print(f"  Trace: {trace_path}")
    print("="*60)
    return EXIT_OK


def _parse_skew(text: Optional[str]) -> Tuple[float, ...]:
    if text is None:
        return DEFAULT_SKEW_THRESHOLDS
    try:
        return tuple(float(part) / 100.0 for part in text.split(",") if part.strip())
    except ValueError:
        raise ShopperError(f"--skew expects comma-separated percentages, got {text!r}") from None


def eval_command(args, config: RunConfig) -> int:
    """Handle the eval command."""
    logger = logging.getLogger(__name__)
    checkpoint = _require(args.checkpoint or config.paths.checkpoint, "--checkpoint")
    data_dir = _require(args.data_dir or config.paths.data_dir, "--data-dir")
    seed = config.optimizer.rng_seed if args.seed is None else args.seed
    thresholds = _parse_skew(args.skew)
    out = _prepare_output(Path(args.out) if args.out else checkpoint.with_suffix(".eval.csv"))

    v, model_config, header = load_checkpoint(checkpoint)
    split_seed, bootstrap_seed = subsystem_seeds(seed, 2)
    catalog, split = load_data_dir(data_dir, split_seed)
    verify_catalog(header, catalog)
    summary = summarize(v)

    label = model_config.label()
    columns: Dict[str, EvaluationResult] = {
        ALL_COLUMN: heldout_conditional_loglik(
            summary, model_config, catalog, heldout_pairs(split.test), seed=bootstrap_seed
        )
    }
    for threshold, pairs in build_skewed_test_sets(split, catalog, thresholds).items():
        columns[skew_column(threshold)] = heldout_conditional_loglik(
            summary, model_config, catalog, pairs, seed=bootstrap_seed
        )
    results = {label: columns}
    if args.mode:
        results[f"{label} [{args.mode}]"] = {
            args.mode: heldout_basket_loglik(
                summary, model_config, catalog, split.test, args.mode, seed=bootstrap_seed
            )
        }

    for row_label, row in results.items():
        print(f"\n{format_evaluation_table({row_label: row})}")
        empty = [column for column, result in row.items() if result.count == 0]
        if empty:
            print(f"  ⊘ Empty test sets (NaN mean): {', '.join(empty)}")

    digest = header.get("extra", {}).get("config_hash", config_hash(model_config.to_dict()))
    write_report_csv(evaluation_table(results), out, digest, seed)
    logger.info(f"Evaluation written to {out}")
    return EXIT_OK


def metrics_command(args, config: RunConfig) -> int:
    """Handle the metrics command."""
    checkpoint = _require(args.checkpoint or config.paths.checkpoint, "--checkpoint")
    out_dir = _prepare_output((Path(args.out) if args.out else checkpoint.parent) / "metrics.csv").parent
    v, model_config, header = load_checkpoint(checkpoint)
    catalog = catalog_from_header(header)
    summary = summarize(v)

    if args.all_pairs_top is not None:
        top_n = args.all_pairs_top
        queries = list(range(catalog.n_items - 1))
    else:
        if not args.items:
            raise ShopperError("give item ids to query or --all-pairs-top N")
        top_n = args.top
        queries = [_resolve_item(catalog, item_id) for item_id in args.items]

    complements = {c: rank_complements(summary, catalog, c, top_n) for c in queries}
    exchangeables = {c: rank_exchangeable(summary, model_config, catalog, c, top_n) for c in queries}
    table = partner_table(catalog, complements, exchangeables)

    print("\n" + "="*60)
    for c in queries:
        print(f"{catalog.items[c]}")
        print("  complements:   " + ", ".join(f"{catalog.items[p]} ({s:.3f})" for p, s in complements[c]))
        print("  exchangeable:  " + ", ".join(f"{catalog.items[p]} ({s:.3f})" for p, s in exchangeables[c]))
    print("="*60)

    digest = header.get("extra", {}).get("config_hash", config_hash(model_config.to_dict()))
    seed = header.get("seed", 0)
    write_report_csv(table, out_dir / "metrics.csv", digest, seed)
    matrix = complementarity_matrix(summary)
    write_report_csv(
        pair_scores_frame(catalog, {(c, p): float(matrix[c, p]) for c in queries for p, _ in complements[c]},
                          "complementarity"),
        out_dir / "complementarity.csv", digest, seed,
    )
    write_report_csv(
        pair_scores_frame(catalog, {(c, p): s for c in queries for p, s in exchangeables[c]}, "exchangeability"),
        out_dir / "exchangeability.csv", digest, seed,
    )
    return EXIT_OK


def export_command(args, config: RunConfig) -> int:
    """Handle the export command."""
    logger = logging.getLogger(__name__)
    checkpoint = _require(args.checkpoint or config.paths.checkpoint, "--checkpoint")
    out_dir = _prepare_output((Path(args.out) if args.out else checkpoint.parent) / "item_vectors.csv").parent
    v, _, header = load_checkpoint(checkpoint)
    catalog = catalog_from_header(header)
    summary = summarize(v)

    rows = []
    for c in range(catalog.n_items - 1):
        try:
            ranked = similar_items(summary, catalog, c, args.top)
        except DegenerateVectorError as e:
            logger.warning(f"Skipping {catalog.items[c]}: {e}")
            continue
        for rank, (partner, distance) in enumerate(ranked, start=1):
            rows.append((catalog.items[c], rank, catalog.items[partner], distance))

    digest = header.get("extra", {}).get("config_hash", "")
    seed = header.get("seed", 0)
    write_report_csv(export_item_vectors(summary, catalog), out_dir / "item_vectors.csv", digest, seed)
    write_report_csv(
        pd.DataFrame(rows, columns=["item", "rank", "similar_item", "cosine_distance"]),
        out_dir / "similar_items.csv", digest, seed,
    )
    print(f"✓ Exported {catalog.n_items - 1} item vectors to {out_dir}")
    return EXIT_OK


def run_command(func: Callable, args) -> int:
    """Run a command handler and map failures to exit codes."""
    logger = logging.getLogger(__name__)
    try:
        config = load_run_config(Path(args.config) if args.config else None)
        return func(args, config)
    except OptimizationError as e:
        print(f"✗ Optimization failed: {e}")
        logger.debug("Optimization failure", exc_info=True)
        return EXIT_OPTIMIZATION
    except CatalogMismatchError as e:
        print(f"✗ Incompatible checkpoint: {e}")
        logger.debug("Catalog mismatch", exc_info=True)
        return EXIT_COMPATIBILITY
    except (ShopperError, OSError, ValueError) as e:
        print(f"✗ {e}")
        logger.debug("Input error", exc_info=True)
        return EXIT_INPUT
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Sequential shopping choice model: simulate, fit, evaluate and analyse"
    )
    parser.add_argument(
        '--log-level',
        default=LOG_LEVEL,
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help='Set logging level'
    )
    parser.add_argument(
        '--config',
        default=None,
        help='Run configuration file with [model], [optimizer], [simulate] and [paths] sections'
    )
    parser.add_argument(
        '--threads',
        type=int,
        default=None,
        help='Worker threads (overrides the [optimizer] section)'
    )

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    # Simulate command
    simulate_parser = subparsers.add_parser(
        'simulate',
        help='Write the toy world training and intervention datasets'
    )
    simulate_parser.add_argument('--out', default=None, help='Output directory')
    simulate_parser.add_argument('--seed', type=int, default=None, help='Simulation seed')
    simulate_parser.set_defaults(func=simulate_command)

    # Fit command
    fit_parser = subparsers.add_parser(
        'fit',
        help='Fit the variational posterior'
    )
    fit_parser.add_argument('--data-dir', default=None, help='Directory with the trips and prices CSVs')
    fit_parser.add_argument('--checkpoint', default=None, help='Checkpoint file to write')
    fit_parser.add_argument('--out', default=None, help='Training trace CSV (default: next to the checkpoint)')
    fit_parser.add_argument('--seed', type=int, default=None, help='Root seed')
    fit_parser.add_argument('--threads', type=int, default=argparse.SUPPRESS, help='Worker threads')
    fit_parser.add_argument('--max-iterations', type=int, default=None, help='Iteration limit')
    fit_parser.set_defaults(func=fit_command)

    # Eval command
    eval_parser = subparsers.add_parser(
        'eval',
        help='Held-out log-likelihood tables'
    )
    eval_parser.add_argument('--checkpoint', default=None, help='Fitted checkpoint')
    eval_parser.add_argument('--data-dir', default=None, help='Directory with the trips and prices CSVs')
    eval_parser.add_argument('--skew', default=None, help='Price skew thresholds in percent (default: 2.5,5,15)')
    eval_parser.add_argument('--mode', choices=list(MODES), default=None,
                             help='Also score triplets, whole baskets or whole trips with checkout')
    eval_parser.add_argument('--out', default=None, help='Evaluation CSV (default: next to the checkpoint)')
    eval_parser.add_argument('--seed', type=int, default=None, help='Root seed (split and bootstrap)')
    eval_parser.set_defaults(func=eval_command)

    # Metrics command
    metrics_parser = subparsers.add_parser(
        'metrics',
        help='Complementarity and exchangeability rankings'
    )
    metrics_parser.add_argument('items', nargs='*', help='Item ids to query')
    metrics_parser.add_argument('--checkpoint', default=None, help='Fitted checkpoint')
    metrics_parser.add_argument('--top', type=int, default=5, help='Partners per query item (default: 5)')
    metrics_parser.add_argument('--all-pairs-top', type=int, default=None,
                                help='Query every item and keep its top N partners')
    metrics_parser.add_argument('--out', default=None, help='Output directory (default: checkpoint directory)')
    metrics_parser.set_defaults(func=metrics_command)

    # Export command
    export_parser = subparsers.add_parser(
        'export',
        help='Write posterior item vectors and similar items'
    )
    export_parser.add_argument('--checkpoint', default=None, help='Fitted checkpoint')
    export_parser.add_argument('--top', type=int, default=5, help='Similar items per item (default: 5)')
    export_parser.add_argument('--out', default=None, help='Output directory (default: checkpoint directory)')
    export_parser.set_defaults(func=export_command)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(args.log_level)

    if not args.command:
        parser.print_help()
        return 1

    return run_command(args.func, args)


if __name__ == '__main__':
    sys.exit(main())
