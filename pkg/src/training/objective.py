#!/usr/bin/env python3
"""
Decomposition Objective

The combined model (Lagrangian branch + universal approximator), the
penalized loss L_e + λ·L_b and the misalignment metrics.

    L_e = (mean |f_c^NN + f_n^NN − f|^p)^(1/p)
    L_b = (mean |f_n^NN|^p)^(1/p)

means taken over all N·n force components. The MSE variant squares both
terms and drops the root.
"""

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import torch

from src.dynamics.systems import ForceSample
from src.errors import ConfigError, EmptyDatasetError, MissingGroundTruthError
from src.networks.lagrangian import LagrangianModel, init_params, lnn_force_batch
from src.networks.mlp import MlpSpec, init_mlp, uan_forward_batch
from src.networks.params import ParamVector

ROOT_GUARD = 1e-30
DEFAULT_LR_SCHEDULE: Tuple[Tuple[float, int], ...] = ((1e-2, 500), (1e-3, 500), (1e-4, 500), (1e-5, 500))


class Branches(Enum):
    """Which branches contribute to the predicted force."""
    BOTH = "both"
    LNN_ONLY = "lnn_only"
    UAN_ONLY = "uan_only"


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimization settings for one training run.

    Args:
        lam: Penalty weight λ on L_b
        p: Loss exponent (1, 2 or 3)
        mse: Squared-error variant (squares both terms, no root)
        batch_size: Minibatch size
        lr_schedule: (learning rate, steps) stages run in order
        betas: ADAM moment decay rates
        eps: ADAM denominator guard
        seed: Shuffling seed
        skip_singular: Skip and count steps with a singular mass matrix
    """
    lam: float = 1.0
    p: int = 1
    mse: bool = False
    batch_size: int = 32
    lr_schedule: Tuple[Tuple[float, int], ...] = DEFAULT_LR_SCHEDULE
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    skip_singular: bool = False

    def __post_init__(self):
        schedule = tuple((float(lr), int(steps)) for lr, steps in self.lr_schedule)
        object.__setattr__(self, 'lr_schedule', schedule)
        object.__setattr__(self, 'betas', tuple(float(b) for b in self.betas))
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.p not in (1, 2, 3):
            raise ConfigError(f"p must be 1, 2 or 3, got {self.p}")
        if not schedule or any(lr <= 0 or steps < 1 for lr, steps in schedule):
            raise ConfigError("lr_schedule must be a non-empty list of (positive lr, steps >= 1)")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")

    @property
    def total_steps(self) -> int:
        return sum(steps for _, steps in self.lr_schedule)

    def to_dict(self) -> dict:
        data = asdict(self)
        data['lr_schedule'] = [list(stage) for stage in self.lr_schedule]
        data['betas'] = list(self.betas)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'TrainConfig':
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown train settings: {sorted(unknown)}")
        kwargs = dict(data)
        if 'lr_schedule' in kwargs:
            kwargs['lr_schedule'] = tuple(tuple(stage) for stage in kwargs['lr_schedule'])
        if 'betas' in kwargs:
            kwargs['betas'] = tuple(kwargs['betas'])
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid train settings: {e}")


@dataclass(frozen=True)
class LossReport:
    """L_e, L_b and total = L_e + λ·L_b under the λ that produced it."""
    L_e: float
    L_b: float
    total: float
    lam: float

    @classmethod
    def from_terms(cls, L_e: float, L_b: float, lam: float) -> 'LossReport':
        return cls(float(L_e), float(L_b), float(L_e) + lam * float(L_b), float(lam))


@dataclass(frozen=True)
class MisalignmentReport:
    m_c: float
    m_n: float


@dataclass
class ForceBatch:
    """Tensor view of a list of ForceSample (rows are samples)."""
    q: torch.Tensor
    qd: torch.Tensor
    t: torch.Tensor
    f: torch.Tensor
    f_c_true: Optional[torch.Tensor] = None
    f_n_true: Optional[torch.Tensor] = None

    @classmethod
    def from_samples(cls, samples: Sequence[ForceSample]) -> 'ForceBatch':
        if not samples:
            raise EmptyDatasetError("Cannot build a batch from no samples")

        def stack(values):
            return torch.from_numpy(np.stack(values).astype(np.float64))

        with_truth = all(s.has_truth for s in samples)
        return cls(
            q=stack([s.state.q for s in samples]),
            qd=stack([s.state.qdot for s in samples]),
            t=torch.tensor([s.state.t for s in samples], dtype=torch.float64),
            f=stack([s.f for s in samples]),
            f_c_true=stack([s.f_c_true for s in samples]) if with_truth else None,
            f_n_true=stack([s.f_n_true for s in samples]) if with_truth else None,
        )

    def __len__(self) -> int:
        return self.q.shape[0]

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def subset(self, index) -> 'ForceBatch':
        index = torch.as_tensor(index, dtype=torch.long)
        return ForceBatch(
            self.q[index], self.qd[index], self.t[index], self.f[index],
            None if self.f_c_true is None else self.f_c_true[index],
            None if self.f_n_true is None else self.f_n_true[index],
        )


@dataclass(frozen=True)
class NNPhDModel:
    """
    Both branches of the decomposition.

    ``branches`` selects which outputs enter the prediction; UAN_ONLY is a
    plain black-box regressor and trains on L_e alone.
    """
    lagrangian: LagrangianModel
    uan: MlpSpec
    branches: Branches = Branches.BOTH

    def __post_init__(self):
        object.__setattr__(self, 'branches', Branches(self.branches))
        if self.uan.output_dim != self.lagrangian.n:
            raise ValueError("UAN output width must equal the number of degrees of freedom")

    @property
    def n(self) -> int:
        return self.lagrangian.n

    def effective_lambda(self, lam: float) -> float:
        return 0.0 if self.branches is Branches.UAN_ONLY else lam

    def init(self, seed: int) -> Tuple[ParamVector, ParamVector]:
        """Fresh (params_c, params_n); the two branches use distinct seeds."""
        return init_params(self.lagrangian, seed), init_mlp(self.uan, seed + 1)

    def forces(self, params_c: ParamVector, params_n: ParamVector, batch: ForceBatch) -> Tuple[torch.Tensor, torch.Tensor]:
        """(f_c^NN, f_n^NN) on a batch, each of shape (B, n)."""
        if self.branches is Branches.UAN_ONLY:
            f_c = torch.zeros_like(batch.f)
        else:
            f_c = lnn_force_batch(self.lagrangian, params_c, batch.q, batch.qd)
        if self.branches is Branches.LNN_ONLY:
            f_n = torch.zeros_like(batch.f)
        else:
            f_n = uan_forward_batch(params_n, self.uan, batch.q, batch.qd, batch.t)
        return f_c, f_n

    def acceleration(self, params_c: ParamVector, params_n: ParamVector):
        """numpy q̈(q, q̇, t) of the learned model, for RK4 rollouts."""

        def accel(q: np.ndarray, qd: np.ndarray, t: float) -> np.ndarray:
            batch = ForceBatch(
                torch.from_numpy(np.asarray(q, dtype=np.float64)[None, :]),
                torch.from_numpy(np.asarray(qd, dtype=np.float64)[None, :]),
                torch.tensor([t], dtype=torch.float64),
                torch.zeros((1, self.n), dtype=torch.float64),
            )
            f_c, f_n = self.forces(params_c, params_n, batch)
            return (f_c + f_n)[0].detach().numpy()

        return accel


def _power_mean(x: torch.Tensor, p: int, mse: bool) -> torch.Tensor:
    if mse:
        return (x * x).mean()
    if p == 1:
        return x.abs().mean()
    return (x.abs().pow(p).mean() + ROOT_GUARD).pow(1.0 / p)


def loss_terms(f_pred: torch.Tensor, f_n: torch.Tensor, f: torch.Tensor, cfg: TrainConfig) -> Tuple[torch.Tensor, torch.Tensor]:
    """Differentiable (L_e, L_b)."""
    return _power_mean(f_pred - f, cfg.p, cfg.mse), _power_mean(f_n, cfg.p, cfg.mse)


def loss(params_c: ParamVector, params_n: ParamVector, batch, cfg: TrainConfig,
         model: NNPhDModel) -> LossReport:
    """
    Evaluate the penalized objective on a batch.

    Args:
        params_c: Lagrangian parameters
        params_n: UAN parameters
        batch: ForceBatch or list of ForceSample
        cfg: Supplies λ, p and the MSE flag
        model: Branch definitions
    """
    if not isinstance(batch, ForceBatch):
        batch = ForceBatch.from_samples(batch)
    f_c, f_n = model.forces(params_c.detached(), params_n.detached(), batch)
    L_e, L_b = loss_terms(f_c + f_n, f_n, batch.f, cfg)
    return LossReport.from_terms(float(L_e), float(L_b), model.effective_lambda(cfg.lam))


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def misalignment_from_forces(f_c: np.ndarray, f_n: np.ndarray, f_c_true: np.ndarray,
                             f_n_true: np.ndarray) -> MisalignmentReport:
    """RMS deviation of each learned component from its ground truth."""
    return MisalignmentReport(rms(np.asarray(f_c) - f_c_true), rms(np.asarray(f_n) - f_n_true))


def misalignment(params_c: ParamVector, params_n: ParamVector, samples, model: NNPhDModel) -> MisalignmentReport:
    """
    Raises:
        MissingGroundTruthError: some sample lacks f_c_true / f_n_true
    """
    batch = samples if isinstance(samples, ForceBatch) else ForceBatch.from_samples(samples)
    if batch.f_c_true is None or batch.f_n_true is None:
        raise MissingGroundTruthError("Misalignment needs samples with the true decomposition")
    f_c, f_n = model.forces(params_c.detached(), params_n.detached(), batch)
    return misalignment_from_forces(
        f_c.detach().numpy(), f_n.detach().numpy(), batch.f_c_true.numpy(), batch.f_n_true.numpy()
    )
