#!/usr/bin/env python3
"""
Exact Derivatives

First and second derivatives of scalar computations with respect to
designated leaf slots, and parameter gradients through pipelines that
themselves contain input derivatives and linear solves.

Everything is reverse-mode autograd with ``create_graph=True``, so any
derivative returned while the inputs are being tracked can be
differentiated again. Solves go through ``torch.linalg.solve`` whose
backward pass uses the adjoint system, never an explicit inverse.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Optional, Sequence, Union

import torch

from src.autodiff.expression import Expression, SlotKind, SlotLayout
from src.errors import SingularMassMatrixError

MAX_CONDITION = 1e12

Differentiable = Union[Expression, Callable[[torch.Tensor], torch.Tensor]]


class DerivativeOrder(Enum):
    FIRST = 1
    SECOND = 2


@dataclass(frozen=True)
class DerivativeRequest:
    """
    What to differentiate.

    Args:
        order: FIRST or SECOND
        wrt: Slots for first derivatives; for SECOND, the row slots
        cols: Column slots for SECOND (defaults to ``wrt``)
        through: Differentiate the result again w.r.t. parameter slots
    """
    order: DerivativeOrder
    wrt: Sequence[int]
    cols: Optional[Sequence[int]] = None
    through: bool = False

    def validate(self, layout: SlotLayout) -> None:
        if not self.wrt:
            raise ValueError("Derivative request needs at least one slot")
        if self.order is DerivativeOrder.SECOND:
            allowed = {SlotKind.COORDINATE, SlotKind.VELOCITY}
            for index in list(self.wrt) + list(self.cols or ()):
                if layout.kind_of(index) not in allowed:
                    raise ValueError(
                        f"Second-order requests may only name coordinate/velocity slots (slot {index})"
                    )


def _as_function(expr: Differentiable) -> Callable[[torch.Tensor], torch.Tensor]:
    if isinstance(expr, Expression):
        return expr.forward
    return expr


def _prepare(leaf_values: Any) -> "tuple[torch.Tensor, bool]":
    """Return a tracked leaf tensor and whether it came from an outer graph."""
    if isinstance(leaf_values, torch.Tensor) and leaf_values.requires_grad:
        return leaf_values, True
    x = torch.as_tensor(leaf_values, dtype=torch.float64).detach().clone()
    return x.requires_grad_(True), False


def _scalar(y: torch.Tensor) -> torch.Tensor:
    if y.numel() != 1:
        raise ValueError(f"Expected a scalar expression, got shape {tuple(y.shape)}")
    return y.reshape(())


def _input_grad(y: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    if not y.requires_grad:
        return torch.zeros_like(x)
    (g,) = torch.autograd.grad(y, x, create_graph=True, allow_unused=True)
    return torch.zeros_like(x) if g is None else g


def grad(expr: Differentiable, leaf_values: Any, wrt: Sequence[int]) -> torch.Tensor:
    """
    Exact first derivatives of a scalar expression, in ``wrt`` order.

    sign and |·| use the subgradient 0 at their kink; leaky-relu takes the
    negative-side slope at 0.
    """
    if not wrt:
        raise ValueError("grad needs at least one slot")
    x, tracked = _prepare(leaf_values)
    y = _scalar(_as_function(expr)(x))
    g = _input_grad(y, x)[list(wrt)]
    return g if tracked else g.detach()


def second_block(expr: Differentiable, leaf_values: Any,
                 rows: Sequence[int], cols: Sequence[int]) -> torch.Tensor:
    """Matrix M with M[i][j] = ∂²expr / ∂rows[i] ∂cols[j]."""
    x, tracked = _prepare(leaf_values)
    y = _scalar(_as_function(expr)(x))
    g = _input_grad(y, x)
    block = torch.stack([_input_grad(g[r], x)[list(cols)] for r in rows])
    return block if tracked else block.detach()


def grad_through(builder: Callable[[torch.Tensor], torch.Tensor], leaf_values: Any,
                 wrt: Sequence[int]) -> torch.Tensor:
    """
    Gradient of an outer scalar pipeline with respect to parameter slots.

    ``builder`` receives the tracked leaf tensor and may call ``grad``,
    ``second_block`` and ``solve`` on it; those results stay on the graph
    so this gradient differentiates through them exactly.
    """
    x = torch.as_tensor(leaf_values, dtype=torch.float64).detach().clone().requires_grad_(True)
    out = _scalar(builder(x))
    if not out.requires_grad:
        return torch.zeros(len(wrt), dtype=torch.float64)
    (g,) = torch.autograd.grad(out, x, allow_unused=True)
    if g is None:
        return torch.zeros(len(wrt), dtype=torch.float64)
    return g[list(wrt)].detach()


def differentiate(expr: Differentiable, leaf_values: Any, request: DerivativeRequest,
                  layout: Optional[SlotLayout] = None) -> torch.Tensor:
    """Dispatch a ``DerivativeRequest`` to ``grad`` or ``second_block``."""
    if layout is None and isinstance(expr, Expression):
        layout = expr.layout
    if layout is not None:
        request.validate(layout)
    if request.order is DerivativeOrder.FIRST:
        return grad(expr, leaf_values, request.wrt)
    return second_block(expr, leaf_values, request.wrt, request.cols or request.wrt)


def batch_input_grad(y: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """
    Per-row gradients for batched outputs.

    ``y[b]`` must depend only on row ``b`` of ``x``; the gradient of the sum
    then holds each sample's own derivative in its row.
    """
    if not y.requires_grad:
        return torch.zeros_like(x)
    (g,) = torch.autograd.grad(y.sum(), x, create_graph=True, allow_unused=True)
    return torch.zeros_like(x) if g is None else g


def batch_jacobian(g: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """J[b, i, j] = ∂g[b, i] / ∂x[b, j] for row-independent batches."""
    return torch.stack([batch_input_grad(g[:, i], x) for i in range(g.shape[1])], dim=1)


def solve(matrix: torch.Tensor, rhs: torch.Tensor, state: Any = None,
          max_condition: float = MAX_CONDITION) -> torch.Tensor:
    """
    Solve ``matrix · x = rhs`` (optionally batched) after a conditioning check.

    Raises:
        SingularMassMatrixError: condition estimate above ``max_condition``;
            carries the state of the first offending batch entry.
    """
    with torch.no_grad():
        condition = torch.linalg.cond(matrix.detach())
        bad = ~torch.isfinite(condition) | (condition > max_condition)
    if bool(bad.any()):
        flat = bad.reshape(-1)
        first = int(torch.nonzero(flat)[0])
        offending = state
        if state is not None and bad.ndim > 0:
            offending = state[first]
        raise SingularMassMatrixError(
            "Singular mass matrix",
            state=offending,
            condition=float(condition.reshape(-1)[first]),
            batch_index=first if bad.ndim > 0 else None,
        )
    return torch.linalg.solve(matrix, rhs)
