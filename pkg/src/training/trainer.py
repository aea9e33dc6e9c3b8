#!/usr/bin/env python3
"""
Trainer

Joint minibatch training of both branches: every step evaluates the
penalized objective on one shuffled minibatch, differentiates it with
respect to both parameter vectors (through the Hessian solve of the
Lagrangian branch) and applies one ADAM update to each.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from src.errors import NNPhDError, NonFiniteLossError, SingularMassMatrixError
from src.networks.params import ParamVector
from src.training.objective import ForceBatch, LossReport, NNPhDModel, TrainConfig, loss, loss_terms
from src.training.optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 500
TRACE_COLUMNS = ('step', 'lr', 'Le', 'Lb', 'total')


@dataclass(frozen=True)
class TraceRow:
    step: int
    lr: float
    L_e: float
    L_b: float
    total: float


@dataclass
class TrainResult:
    """Final parameters, the per-step trace and the full-dataset loss."""
    params_c: ParamVector
    params_n: ParamVector
    trace: List[TraceRow] = field(default_factory=list)
    final: Optional[LossReport] = None
    singular_steps: int = 0

    def trace_array(self) -> np.ndarray:
        return np.array([[r.step, r.lr, r.L_e, r.L_b, r.total] for r in self.trace], dtype=np.float64)

    def save_trace_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = self.trace_array().reshape(-1, len(TRACE_COLUMNS))
        np.savetxt(path, data, fmt='%.17g', delimiter=',', header=','.join(TRACE_COLUMNS),
                   comments='', newline='\n', encoding='utf-8')
        return path


def minibatches(n_samples: int, batch_size: int, seed: int) -> Iterator[np.ndarray]:
    """Endless stream of index batches: a fresh seeded permutation per epoch."""
    rng = np.random.default_rng(seed)
    size = min(batch_size, n_samples)
    while True:
        order = rng.permutation(n_samples)
        for start in range(0, n_samples, size):
            yield order[start:start + size]


def lr_for_steps(cfg: TrainConfig) -> Iterator[Tuple[int, float]]:
    step = 0
    for lr, n_steps in cfg.lr_schedule:
        for _ in range(n_steps):
            step += 1
            yield step, lr


def _gradients(total: torch.Tensor, params: Sequence[torch.Tensor]) -> List[torch.Tensor]:
    grads = torch.autograd.grad(total, list(params), allow_unused=True)
    return [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]


def train(samples, cfg: TrainConfig, model: NNPhDModel,
          params_c: Optional[ParamVector] = None,
          params_n: Optional[ParamVector] = None) -> TrainResult:
    """
    Run the learning-rate schedule on ``samples``.

    Args:
        samples: ForceBatch or list of ForceSample
        cfg: Optimization settings
        model: Branch definitions
        params_c: Warm-start Lagrangian parameters (fresh init when None)
        params_n: Warm-start UAN parameters (fresh init when None)

    Returns:
        TrainResult with one trace row per step

    Raises:
        SingularMassMatrixError: annotated with the step index (unless
            ``cfg.skip_singular``)
        NonFiniteLossError: the minibatch objective is NaN or infinite
        NonFiniteGradientError: annotated with the step index
    """
    batch = samples if isinstance(samples, ForceBatch) else ForceBatch.from_samples(samples)
    if params_c is None or params_n is None:
        fresh_c, fresh_n = model.init(cfg.seed)
        params_c = fresh_c if params_c is None else params_c
        params_n = fresh_n if params_n is None else params_n

    values_c = params_c.values.detach().clone()
    values_n = params_n.values.detach().clone()
    state_c = AdamState.zeros_like(values_c)
    state_n = AdamState.zeros_like(values_n)
    lam = model.effective_lambda(cfg.lam)

    result = TrainResult(params_c, params_n)
    batches = minibatches(len(batch), cfg.batch_size, cfg.seed)

    for step, lr in lr_for_steps(cfg):
        minibatch = batch.subset(next(batches))
        tracked_c = params_c.with_values(values_c.clone().requires_grad_(True))
        tracked_n = params_n.with_values(values_n.clone().requires_grad_(True))
        try:
            f_c, f_n = model.forces(tracked_c, tracked_n, minibatch)
            L_e, L_b = loss_terms(f_c + f_n, f_n, minibatch.f, cfg)
            total = L_e + lam * L_b
            if not bool(torch.isfinite(total)):
                raise NonFiniteLossError("Training objective is not finite", L_e=float(L_e), L_b=float(L_b))
            grad_c, grad_n = _gradients(total, [tracked_c.values, tracked_n.values])
            values_c, state_c = adam_step(values_c, grad_c, state_c, lr, cfg.betas, cfg.eps)
            values_n, state_n = adam_step(values_n, grad_n, state_n, lr, cfg.betas, cfg.eps)
        except SingularMassMatrixError as e:
            e.annotate(step=step)
            if not cfg.skip_singular:
                raise
            result.singular_steps += 1
            result.trace.append(TraceRow(step, lr, math.nan, math.nan, math.nan))
            logger.debug("Skipped singular step %d: %s", step, e)
            continue
        except NNPhDError as e:
            raise e.annotate(step=step)

        row = TraceRow(step, lr, float(L_e), float(L_b), float(L_e) + lam * float(L_b))
        result.trace.append(row)
        if step % PROGRESS_EVERY == 0:
            logger.debug("step %d lr=%g L_e=%.6g L_b=%.6g total=%.6g", step, lr, row.L_e, row.L_b, row.total)

    result.params_c = params_c.with_values(values_c.detach())
    result.params_n = params_n.with_values(values_n.detach())
    try:
        result.final = loss(result.params_c, result.params_n, batch, cfg, model)
    except SingularMassMatrixError as e:
        if not cfg.skip_singular:
            raise e.annotate(step=cfg.total_steps)
        logger.warning("Final evaluation hit a singular mass matrix: %s", e)
        return result
    logger.info("Trained lambda=%g p=%d for %d steps: L_e=%.6g L_b=%.6g (singular steps: %d)",
                cfg.lam, cfg.p, cfg.total_steps, result.final.L_e, result.final.L_b, result.singular_steps)
    return result
