#!/usr/bin/env python3
"""
λ Sweeps and Phase-Transition Detection

Warm-started training over an increasing λ grid, and the jump statistic
that separates conservative from non-conservative force fields: the median
recovery error above λ = 1 minus the median below it.
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import ConfigError, InsufficientGridError, NNPhDError
from src.networks.params import ParamVector
from src.training.objective import ForceBatch, LossReport, NNPhDModel, TrainConfig, loss
from src.training.snapshots import SnapshotStore
from src.training.trainer import train

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS: Tuple[float, ...] = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)
SWEEP_COLUMNS = ('lambda', 'train_Le', 'train_Lb', 'test_Le', 'test_Lb')
LOW_WINDOW = (0.1, 0.5)
HIGH_WINDOW = (2.0, 10.0)
DEFAULT_TAU = 0.1


@dataclass(frozen=True)
class SweepEntry:
    lam: float
    train: LossReport
    test: Optional[LossReport] = None
    snapshot_ids: Tuple[str, ...] = ()


@dataclass
class SweepResult:
    """One entry per λ, in strictly increasing λ order."""
    entries: List[SweepEntry]

    def __post_init__(self):
        lams = [e.lam for e in self.entries]
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError("Sweep λ values must be strictly increasing")

    @property
    def lambdas(self) -> List[float]:
        return [e.lam for e in self.entries]

    def recovery_errors(self, source: str = 'train') -> np.ndarray:
        if source == 'train':
            return np.array([e.train.L_e for e in self.entries])
        if source == 'test':
            if any(e.test is None for e in self.entries):
                raise ConfigError("Sweep has no held-out losses")
            return np.array([e.test.L_e for e in self.entries])
        raise ConfigError(f"Unknown loss source {source!r}")

    def to_csv(self, path: Union[str, Path]) -> Path:
        """``lambda, train_Le, train_Lb, test_Le, test_Lb``; nan without a holdout."""
        rows = []
        for e in self.entries:
            test_le = e.test.L_e if e.test is not None else math.nan
            test_lb = e.test.L_b if e.test is not None else math.nan
            rows.append([e.lam, e.train.L_e, e.train.L_b, test_le, test_lb])
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, np.array(rows, dtype=np.float64).reshape(-1, len(SWEEP_COLUMNS)), fmt='%.17g',
                   delimiter=',', header=','.join(SWEEP_COLUMNS), comments='', newline='\n', encoding='utf-8')
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'SweepResult':
        data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2, encoding='utf-8')
        entries = []
        for lam, train_le, train_lb, test_le, test_lb in data:
            test = None if math.isnan(test_le) else LossReport.from_terms(test_le, test_lb, lam)
            entries.append(SweepEntry(float(lam), LossReport.from_terms(train_le, train_lb, lam), test))
        return cls(entries)


class PhaseVerdict(NamedTuple):
    is_nonconservative: bool
    jump: float


def lambda_sweep(samples, lambdas: Sequence[float], base_cfg: TrainConfig, model: NNPhDModel,
                 test_samples=None, store: Optional[SnapshotStore] = None,
                 params_c: Optional[ParamVector] = None,
                 params_n: Optional[ParamVector] = None) -> SweepResult:
    """
    Train at each λ in turn, starting each run from the previous run's
    parameters.

    Args:
        samples: Training set
        lambdas: Strictly increasing λ grid
        base_cfg: Settings shared by every run (its λ is replaced)
        model: Branch definitions
        test_samples: Optional held-out set
        store: Optional snapshot store for the per-λ parameters
        params_c: Initial Lagrangian parameters (fresh init when None)
        params_n: Initial UAN parameters (fresh init when None)

    Raises:
        NNPhDError: any training failure, annotated with the λ at which it
            happened
    """
    lambdas = [float(lam) for lam in lambdas]
    if not lambdas or any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ConfigError("λ grid must be non-empty and strictly increasing", grid=lambdas)

    train_batch = samples if isinstance(samples, ForceBatch) else ForceBatch.from_samples(samples)
    test_batch = None
    if test_samples:
        test_batch = test_samples if isinstance(test_samples, ForceBatch) else ForceBatch.from_samples(test_samples)

    entries = []
    for lam in lambdas:
        cfg = replace(base_cfg, lam=lam)
        try:
            result = train(train_batch, cfg, model, params_c, params_n)
            test_report = loss(result.params_c, result.params_n, test_batch, cfg, model) if test_batch else None
        except NNPhDError as e:
            raise e.annotate(lam=lam)
        params_c, params_n = result.params_c, result.params_n

        snapshot_ids: Tuple[str, ...] = ()
        if store is not None:
            snapshot_ids = (store.save(lam, 'lnn', params_c), store.save(lam, 'uan', params_n))
        entries.append(SweepEntry(lam, result.final, test_report, snapshot_ids))
        logger.info("lambda=%g train L_e=%.6g L_b=%.6g%s", lam, result.final.L_e, result.final.L_b,
                    f" test L_e={test_report.L_e:.6g}" if test_report else "")
    return SweepResult(entries)


def _window_median(lams: np.ndarray, values: np.ndarray, window: Tuple[float, float]) -> float:
    mask = (lams >= window[0]) & (lams <= window[1])
    if not np.any(mask):
        raise InsufficientGridError(f"No λ values in [{window[0]}, {window[1]}]", grid=lams.tolist())
    return float(np.median(values[mask]))


def detect_phase_transition(sweep: SweepResult, tau: float = DEFAULT_TAU, source: str = 'train') -> PhaseVerdict:
    """
    Jump of the recovery error across λ = 1.

    jump = median L_e over λ ∈ [2, 10] − median L_e over λ ∈ [0.1, 0.5];
    the field is flagged non-conservative when jump > τ.

    Raises:
        InsufficientGridError: the grid misses one side of λ = 1 or one of
            the two windows
    """
    lams = np.array(sweep.lambdas, dtype=np.float64)
    if not (np.any(lams < 1.0) and np.any(lams > 1.0)):
        raise InsufficientGridError("Sweep must cover λ below and above 1", grid=lams.tolist())
    errors = sweep.recovery_errors(source)
    jump = _window_median(lams, errors, HIGH_WINDOW) - _window_median(lams, errors, LOW_WINDOW)
    return PhaseVerdict(bool(jump > tau), float(jump))
