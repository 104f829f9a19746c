"""
Optimizer configuration for stochastic variational inference.
"""
from dataclasses import asdict, dataclass
from typing import Dict

from ..config import GAMMA_SHAPE_AUGMENTATION, SHOPPER_SEED, SHOPPER_THREADS
from ..exceptions import ConfigError


@dataclass
class OptimizerConfig:
    """
    Settings of the stochastic optimization.

    Attributes:
        batch_trips: Trips per minibatch
        batch_negatives: Negative items per choice step
        permutations_per_trip: Random basket orderings per sampled trip
        learning_rate: Base step size eta of the adaptive schedule
        decay_epsilon: Small offset in the iteration decay k^(-1/2 + epsilon)
        stabilizer: tau in eta k^(-1/2 + epsilon) / (tau + sqrt(s))
        memory: Weight of the running squared-gradient average
        max_iterations: Hard iteration limit
        check_every: Iterations between validation checks
        patience: Checks without improvement before stopping
        validation_trips: Size of the fixed validation subsample used for monitoring
        init_std: Standard deviation of the Gaussian mean initialization and initial std
        init_gamma_mean: Initial mean of the gamma factors
        init_shape_jitter: Uniform jitter added to the initial gamma shape 1
        gamma_augmentation: Shape augmentation degree of the gamma sampler
        gamma_score_correction: Add the score term of the rejection-based gamma gradient
        threads: Worker threads for per-trip work
        rng_seed: Root seed of the optimization
    """
    batch_trips: int = 100
    batch_negatives: int = 50
    permutations_per_trip: int = 1
    learning_rate: float = 0.1
    decay_epsilon: float = 1e-16
    stabilizer: float = 1.0
    memory: float = 0.9
    max_iterations: int = 20000
    check_every: int = 1000
    patience: int = 10
    validation_trips: int = 1000
    init_std: float = 0.1
    init_gamma_mean: float = 0.1
    init_shape_jitter: float = 0.1
    gamma_augmentation: int = GAMMA_SHAPE_AUGMENTATION
    gamma_score_correction: bool = True
    threads: int = SHOPPER_THREADS
    rng_seed: int = SHOPPER_SEED

    def validate(self) -> "OptimizerConfig":
        for name in ("batch_trips", "batch_negatives", "permutations_per_trip",
                     "max_iterations", "check_every", "patience", "validation_trips", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("learning_rate", "stabilizer", "init_std", "init_gamma_mean"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.memory < 1.0:
            raise ConfigError(f"memory must be in [0, 1), got {self.memory}")
        if self.init_shape_jitter < 0:
            raise ConfigError(f"init_shape_jitter must be >= 0, got {self.init_shape_jitter}")
        if self.gamma_augmentation < 1:
            raise ConfigError(f"gamma_augmentation must be >= 1, got {self.gamma_augmentation}")
        return self

    def to_dict(self) -> Dict:
        return asdict(self)
