"""Exact derivatives for Lagrangian force laws and their training."""

from .expression import (
    Expression,
    ExpressionBuilder,
    Node,
    SlotKind,
    SlotLayout,
    Term,
    evaluate,
)
from .derivatives import (
    DerivativeOrder,
    DerivativeRequest,
    batch_input_grad,
    batch_jacobian,
    differentiate,
    grad,
    grad_through,
    second_block,
    solve,
)

__all__ = [
    'Expression',
    'ExpressionBuilder',
    'Node',
    'SlotKind',
    'SlotLayout',
    'Term',
    'evaluate',
    'DerivativeOrder',
    'DerivativeRequest',
    'batch_input_grad',
    'batch_jacobian',
    'differentiate',
    'grad',
    'grad_through',
    'second_block',
    'solve',
]
