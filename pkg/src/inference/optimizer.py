"""
Adaptive per-coordinate step size for stochastic gradient ascent.

    s_k   = w g_k^2 + (1 - w) s_{k-1}        (s_1 = g_1^2)
    rho_k = eta k^(-1/2 + epsilon) / (tau + sqrt(s_k))
    x_k+1 = x_k + rho_k g_k
"""
from typing import Dict, Optional

import numpy as np


class AdaptiveStepSize:
    """Running squared-gradient step schedule, applied in place to a dict of coordinates."""

    def __init__(self, learning_rate: float = 0.1, decay_epsilon: float = 1e-16,
                 stabilizer: float = 1.0, memory: float = 0.9):
        self.learning_rate = learning_rate
        self.decay_epsilon = decay_epsilon
        self.stabilizer = stabilizer
        self.weight = 1.0 - memory
        self.counter = 1
        self.s: Optional[Dict[str, np.ndarray]] = None

    def step_sizes(self, grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """Update the running averages with `grads` and return this iteration's step sizes."""
        if self.s is None:
            self.s = {key: g ** 2 for key, g in grads.items()}
        else:
            for key, g in grads.items():
                self.s[key] = self.weight * g ** 2 + (1.0 - self.weight) * self.s[key]
        decay = self.learning_rate * self.counter ** (-0.5 + self.decay_epsilon)
        return {key: decay / (self.stabilizer + np.sqrt(s)) for key, s in self.s.items()}

    def step(self, coords: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        for key, rho in self.step_sizes(grads).items():
            coords[key] += rho * grads[key]
        self.counter += 1
