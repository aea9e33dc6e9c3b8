#!/usr/bin/env python3
"""
Dataset Sampling

Gaussian state sampling and the data-quality filters: angular coverage of
the (q, q̇) plane and the q̇ > 0 / q̇ < 0 imbalance. Both filters top the
dataset back up to its requested size with fresh Gaussian draws.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from src.dynamics.systems import ForceSample, State, SystemSpec, true_forces
from src.errors import EmptyDatasetError

logger = logging.getLogger(__name__)

# Upper bound on rejection rounds before giving up on a filter.
MAX_REJECTION_ROUNDS = 10_000


@dataclass(frozen=True)
class DataQualityConfig:
    """Coverage fraction α, imbalance fraction β and dataset sizes."""
    coverage_alpha: float = 1.0
    imbalance_beta: float = 0.5
    n_train: int = 1000
    n_test: int = 1000

    def __post_init__(self):
        for name in ('coverage_alpha', 'imbalance_beta'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.n_train < 1 or self.n_test < 0:
            raise ValueError("n_train must be positive and n_test non-negative")


def _draw(rng: np.random.Generator, spec: SystemSpec, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    q = rng.standard_normal((count, spec.n))
    qd = rng.standard_normal((count, spec.n))
    t = rng.standard_normal(count)
    return q, qd, t


def _to_samples(spec: SystemSpec, q: np.ndarray, qd: np.ndarray, t: np.ndarray) -> List[ForceSample]:
    f, f_c, f_n = true_forces(spec, q, qd, t)
    return [ForceSample(State(q[i], qd[i], t[i]), f[i], f_c[i], f_n[i]) for i in range(q.shape[0])]


def sample_gaussian_states(spec: SystemSpec, n_samples: int, seed: int) -> List[ForceSample]:
    """
    Draw q, q̇ and t i.i.d. from N(0, 1) and attach the oracle forces.

    Args:
        spec: System to sample
        n_samples: Number of samples (≥ 1)
        seed: Seed for ``numpy.random.default_rng``

    Returns:
        List of ForceSample, identical for identical seeds
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be at least 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    return _to_samples(spec, *_draw(rng, spec, n_samples))


def _require_one_dof(spec: SystemSpec) -> None:
    if spec.n != 1:
        raise ValueError(f"Data-quality filters need a 1-DOF system, {spec.name} has {spec.n}")


def polar_angle(q: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """atan2(q̇, q) mapped to [0, 2π)."""
    return np.mod(np.arctan2(qd, q), 2.0 * np.pi)


def _rejection_fill(spec: SystemSpec, rng: np.random.Generator, needed: int, accept) -> List[ForceSample]:
    kept: List[ForceSample] = []
    for _ in range(MAX_REJECTION_ROUNDS):
        if len(kept) >= needed:
            break
        q, qd, t = _draw(rng, spec, max(needed, 64))
        mask = accept(q[:, 0], qd[:, 0])
        if np.any(mask):
            kept.extend(_to_samples(spec, q[mask], qd[mask], t[mask]))
    if len(kept) < needed:
        raise EmptyDatasetError("Rejection sampling could not fill the dataset", needed=needed, found=len(kept))
    return kept[:needed]


def apply_coverage_wedge(samples: Sequence[ForceSample], alpha: float, spec: SystemSpec,
                         seed: int = 0) -> List[ForceSample]:
    """
    Keep only states whose polar angle lies in [0, 2πα) and resample to the
    original count.

    The angle is measured counterclockwise from the positive-q axis, so
    α = 0.5 is the upper half plane.

    Raises:
        EmptyDatasetError: α = 0
    """
    _require_one_dof(spec)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        raise EmptyDatasetError("Coverage fraction 0 leaves no admissible states", alpha=alpha)

    limit = 2.0 * np.pi * alpha

    def inside(q, qd):
        return polar_angle(q, qd) < limit

    kept = [s for s in samples if inside(s.state.q[:1], s.state.qdot[:1])[0]]
    missing = len(samples) - len(kept)
    if missing > 0:
        kept.extend(_rejection_fill(spec, np.random.default_rng(seed), missing, inside))
    logger.debug("Coverage wedge alpha=%g kept %d, resampled %d", alpha, len(samples) - missing, missing)
    return kept


def apply_imbalance(samples: Sequence[ForceSample], beta: float, n_total: int, spec: SystemSpec,
                    seed: int = 0) -> List[ForceSample]:
    """
    Build a dataset of ``n_total`` states with exactly round(β·n_total) of
    them in the upper half plane (q̇ > 0) and the rest with q̇ < 0.

    Existing samples are used first; fresh Gaussian draws fill the rest.
    """
    _require_one_dof(spec)
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    n_upper = int(round(beta * n_total))
    n_lower = n_total - n_upper

    upper = [s for s in samples if s.state.qdot[0] > 0][:n_upper]
    lower = [s for s in samples if s.state.qdot[0] < 0][:n_lower]
    rng = np.random.default_rng(seed)
    if len(upper) < n_upper:
        upper.extend(_rejection_fill(spec, rng, n_upper - len(upper), lambda q, qd: qd > 0))
    if len(lower) < n_lower:
        lower.extend(_rejection_fill(spec, rng, n_lower - len(lower), lambda q, qd: qd < 0))
    logger.debug("Imbalance beta=%g: %d upper, %d lower", beta, n_upper, n_lower)
    return upper + lower


def build_quality_dataset(spec: SystemSpec, cfg: DataQualityConfig, seed: int) -> Tuple[List[ForceSample], List[ForceSample]]:
    """
    Train/test sets for the data-quality experiments.

    The training set goes through the imbalance filter and then the coverage
    wedge; the test set is unfiltered Gaussian data.
    """
    train = sample_gaussian_states(spec, cfg.n_train, seed)
    train = apply_imbalance(train, cfg.imbalance_beta, cfg.n_train, spec, seed=seed + 1)
    if cfg.coverage_alpha < 1.0:
        train = apply_coverage_wedge(train, cfg.coverage_alpha, spec, seed=seed + 2)
    test = sample_gaussian_states(spec, cfg.n_test, seed + 3) if cfg.n_test else []
    return train, test
