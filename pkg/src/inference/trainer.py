"""
Stochastic variational inference driver.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import EmptyDatasetError, OptimizationError
from ..ingestion.catalog import Catalog, Trip
from ..model.config import ModelConfig
from ..model.latent import trip_features
from .config import OptimizerConfig
from .gradients import gradient_estimate
from .objective import validation_bound
from .optimizer import AdaptiveStepSize
from .variational import (
    VariationalState,
    clamp_unconstrained,
    from_unconstrained,
    init_variational_state,
    to_unconstrained,
)

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iteration", "objective_estimate", "validation_loglik", "elapsed_seconds"]


@dataclass
class TraceRow:
    iteration: int
    objective_estimate: float
    validation_loglik: float
    elapsed_seconds: float


def trace_frame(trace: Sequence[TraceRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(row) for row in trace], columns=TRACE_COLUMNS)


def fit(
    catalog: Catalog,
    train: Sequence[Trip],
    validation: Sequence[Trip],
    config: ModelConfig,
    opt: OptimizerConfig,
    progress: Optional[Callable[[TraceRow], None]] = None,
) -> Tuple[VariationalState, List[TraceRow]]:
    """
    Fit the variational posterior by stochastic gradient ascent.

    Every `check_every` iterations (and at the last iteration) the average
    one-vs-each bound per choice step is computed at the variational means on
    a fixed validation subsample. Training stops after `patience` checks
    without improvement.

    Args:
        catalog: Item and user registries
        train: Training trips
        validation: Validation trips (may be empty; then no early stopping)
        config: Model configuration
        opt: Optimizer configuration
        progress: Optional callback invoked with every trace row

    Returns:
        (final variational state, per-iteration trace)
    """
    config.validate()
    opt.validate()
    if not train:
        raise EmptyDatasetError("no training trips")

    init_seed, iteration_seed, validation_seed = np.random.SeedSequence(opt.rng_seed).spawn(3)
    rng = np.random.default_rng(iteration_seed)

    v = init_variational_state(config, catalog, opt, np.random.default_rng(init_seed))
    item_group = v.item_group
    coords = to_unconstrained(v)
    features = [trip_features(catalog, trip) for trip in train]

    validation_features = []
    if validation:
        size = min(opt.validation_trips, len(validation))
        picked = np.sort(np.random.default_rng(validation_seed).choice(len(validation), size=size, replace=False))
        validation_features = [trip_features(catalog, validation[i]) for i in picked]

    stepper = AdaptiveStepSize(opt.learning_rate, opt.decay_epsilon, opt.stabilizer, opt.memory)
    trace: List[TraceRow] = []
    best = -math.inf
    checks_without_improvement = 0
    start = time.perf_counter()

    logger.info(
        f"Fitting {config.label()} on {len(train)} trips "
        f"({len(validation_features)} validation trips monitored), "
        f"max {opt.max_iterations} iterations, {opt.threads} thread(s)"
    )
    pool = ThreadPoolExecutor(max_workers=opt.threads) if opt.threads > 1 else nullcontext()
    with pool as executor:
        for iteration in range(1, opt.max_iterations + 1):
            grads, value = gradient_estimate(v, features, config, opt, rng, executor)
            if not math.isfinite(value) or not all(np.isfinite(g).all() for g in grads.values()):
                raise OptimizationError(iteration)
            stepper.step(coords, grads)
            clamp_unconstrained(coords)
            v = from_unconstrained(coords, item_group)

            validation_loglik = math.nan
            last = iteration == opt.max_iterations
            if iteration % opt.check_every == 0 or last:
                validation_loglik = validation_bound(v.mean_latents(), config, validation_features)
                logger.info(f"Iteration {iteration}: objective {value:.4f}, validation {validation_loglik:.4f}")

            row = TraceRow(iteration, value, validation_loglik, time.perf_counter() - start)
            trace.append(row)
            if progress is not None:
                progress(row)
            logger.debug(f"Iteration {iteration}: objective {value:.4f}")

            if math.isnan(validation_loglik):
                continue
            if validation_loglik > best:
                best = validation_loglik
                checks_without_improvement = 0
            else:
                checks_without_improvement += 1
                if checks_without_improvement >= opt.patience:
                    logger.info(f"Converged at iteration {iteration}: no improvement in {opt.patience} checks")
                    break

    logger.info(f"Fit finished after {len(trace)} iterations in {time.perf_counter() - start:.1f}s")
    return v, trace
