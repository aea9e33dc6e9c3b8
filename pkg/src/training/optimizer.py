#!/usr/bin/env python3
"""
ADAM

Functional ADAM on flat parameter tensors with bias-corrected moments.
"""

from dataclasses import dataclass
from typing import Tuple

import torch

from src.errors import NonFiniteGradientError


@dataclass(frozen=True)
class AdamState:
    m: torch.Tensor
    v: torch.Tensor
    step: int = 0

    @classmethod
    def zeros_like(cls, params: torch.Tensor) -> 'AdamState':
        return cls(torch.zeros_like(params.detach()), torch.zeros_like(params.detach()), 0)


def adam_step(params: torch.Tensor, grads: torch.Tensor, state: AdamState, lr: float,
              betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> Tuple[torch.Tensor, AdamState]:
    """
    One ADAM update.

    Returns:
        (new parameters, new optimizer state); inputs are not modified

    Raises:
        NonFiniteGradientError: NaN or inf in ``grads``
    """
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError(f"Shape mismatch: params {tuple(params.shape)}, grads {tuple(grads.shape)}")
    grads = grads.detach()
    finite = torch.isfinite(grads)
    if not bool(finite.all()):
        bad = torch.nonzero(~finite).reshape(-1)
        raise NonFiniteGradientError(
            "Non-finite gradient", n_bad=int(bad.numel()), first_index=int(bad[0]), size=int(grads.numel())
        )

    beta1, beta2 = betas
    step = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads * grads
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)
    new_params = params.detach() - lr * m_hat / (v_hat.sqrt() + eps)
    return new_params, AdamState(m, v, step)
