"""Training configuration shared by the order-1 and order-2 trainers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class TrainConfig:
    max_iterations: int = 40
    tol: float = 1e-5                 # relative log-likelihood improvement
    variance_floor_factor: float = 1e-3  # of global per-dimension variance
    variance_floor_min: float = 1e-6
    mixture_weight_floor: float = 1e-6
    transition_floor: float = 0.0
    seed: int = 0
    freeze_initials: bool = False     # keep Psi and the t=2 matrix fixed

    def __post_init__(self):
        if self.max_iterations < 1:
            raise DataError("max_iterations must be >= 1")
        if self.tol <= 0 or self.variance_floor_factor <= 0 or \
                self.variance_floor_min <= 0 or self.mixture_weight_floor <= 0:
            raise DataError("thresholds must be positive")
        if self.transition_floor < 0:
            raise DataError("transition_floor must be >= 0")


def frames_of(obs) -> np.ndarray:
    """Accept a FeatureSequence or a bare (T, D) array."""
    mat = getattr(obs, "frames", obs)
    return np.atleast_2d(np.asarray(mat, dtype=np.float64))


def variance_floor(corpus, cfg: TrainConfig) -> np.ndarray:
    """Per-dimension floor from the pooled corpus variance."""
    pooled = np.concatenate([frames_of(o) for o in corpus], axis=0)
    global_var = pooled.var(axis=0)
    return np.maximum(cfg.variance_floor_factor * global_var, cfg.variance_floor_min)
