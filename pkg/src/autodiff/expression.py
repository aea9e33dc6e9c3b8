#!/usr/bin/env python3
"""
Expression Graphs

Small, immutable scalar expression graphs over indexed leaf slots. Each
expression is a topologically ordered list of primitive nodes; evaluation
runs the nodes in order on float64 torch scalars so the same graph can be
differentiated by the helpers in ``derivatives``.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import torch
import torch.nn.functional as F

from src.errors import DomainError, NNPhDError

LEAKY_RELU_SLOPE = 0.2


class SlotKind(Enum):
    """Partition of the leaf slots of an expression."""
    COORDINATE = "coordinate"
    VELOCITY = "velocity"
    TIME = "time"
    PARAMETER = "parameter"


@dataclass(frozen=True)
class SlotLayout:
    """
    Flat ordering of leaf slots: coordinates, velocities, time, parameters.

    Args:
        n_coordinates: Number of generalized coordinates q
        n_velocities: Number of generalized velocities q̇
        has_time: Whether a time slot is present
        n_parameters: Number of parameter slots
    """
    n_coordinates: int = 0
    n_velocities: int = 0
    has_time: bool = False
    n_parameters: int = 0

    @property
    def size(self) -> int:
        return self.n_coordinates + self.n_velocities + int(self.has_time) + self.n_parameters

    @property
    def coordinates(self) -> Tuple[int, ...]:
        return tuple(range(self.n_coordinates))

    @property
    def velocities(self) -> Tuple[int, ...]:
        start = self.n_coordinates
        return tuple(range(start, start + self.n_velocities))

    @property
    def time(self) -> Tuple[int, ...]:
        if not self.has_time:
            return ()
        return (self.n_coordinates + self.n_velocities,)

    @property
    def parameters(self) -> Tuple[int, ...]:
        start = self.n_coordinates + self.n_velocities + int(self.has_time)
        return tuple(range(start, start + self.n_parameters))

    def kind_of(self, index: int) -> SlotKind:
        """Return the kind of the slot at a flat index."""
        if index in self.coordinates:
            return SlotKind.COORDINATE
        if index in self.velocities:
            return SlotKind.VELOCITY
        if index in self.time:
            return SlotKind.TIME
        if index in self.parameters:
            return SlotKind.PARAMETER
        raise IndexError(f"Slot {index} outside layout of size {self.size}")


@dataclass(frozen=True)
class Node:
    """
    One primitive operation.

    ``value`` holds the slot index for leaves, the number for constants,
    the slope for leaky-relu and the output component for solve nodes.
    """
    op: str
    args: Tuple[int, ...] = ()
    value: Optional[float] = None


def _check_log(node_index: int, x: torch.Tensor) -> torch.Tensor:
    if float(x) <= 0.0:
        raise DomainError(f"log of non-positive value {float(x)!r}", node_index)
    return torch.log(x)


def _check_div(node_index: int, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if float(b) == 0.0:
        raise DomainError("division by zero", node_index)
    return a / b


def _check_sqrt(node_index: int, x: torch.Tensor) -> torch.Tensor:
    if float(x) < 0.0:
        raise DomainError(f"sqrt of negative value {float(x)!r}", node_index)
    return torch.sqrt(x)


def _check_pow(node_index: int, base: torch.Tensor, exponent: torch.Tensor) -> torch.Tensor:
    b, e = float(base), float(exponent)
    if b < 0.0 and not float(e).is_integer():
        raise DomainError(f"non-integer power {e!r} of negative base", node_index)
    if b == 0.0 and e < 0.0:
        raise DomainError("negative power of zero", node_index)
    return torch.pow(base, exponent)


def _solve_component(node_index: int, operands: List[torch.Tensor], component: int) -> torch.Tensor:
    from src.autodiff.derivatives import solve

    k = int((math.isqrt(1 + 4 * len(operands)) - 1) // 2)
    matrix = torch.stack(operands[:k * k]).reshape(k, k)
    rhs = torch.stack(operands[k * k:])
    try:
        return solve(matrix, rhs)[component]
    except NNPhDError as e:
        raise e.annotate(node_index=node_index)


UNARY: Dict[str, Callable[[torch.Tensor], torch.Tensor]] = {
    'neg': torch.neg,
    'exp': torch.exp,
    'sin': torch.sin,
    'cos': torch.cos,
    'tanh': torch.tanh,
    'softplus': F.softplus,
    'sign': torch.sign,
    'abs': torch.abs,
}

BINARY: Dict[str, Callable[[torch.Tensor, torch.Tensor], torch.Tensor]] = {
    'add': torch.add,
    'sub': torch.sub,
    'mul': torch.mul,
}

PRIMITIVES = (
    set(UNARY) | set(BINARY)
    | {'leaf', 'const', 'div', 'pow', 'log', 'sqrt', 'leaky_relu', 'solve'}
)


@dataclass(frozen=True)
class Expression:
    """
    Immutable scalar expression over the slots of ``layout``.

    The node list is topologically ordered: every node references only
    earlier nodes. ``output`` is the index of the result node.
    """
    layout: SlotLayout
    nodes: Tuple[Node, ...]
    output: int

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("Expression must have at least one node")
        for index, node in enumerate(self.nodes):
            if node.op not in PRIMITIVES:
                raise ValueError(f"Unknown primitive {node.op!r} at node {index}")
            if any(arg >= index or arg < 0 for arg in node.args):
                raise ValueError(f"Node {index} references a later or invalid node")
            if node.op == 'leaf' and not 0 <= int(node.value) < self.layout.size:
                raise ValueError(f"Leaf node {index} references slot {node.value}")
        if not 0 <= self.output < len(self.nodes):
            raise ValueError("Output node out of range")

    def forward(self, leaves: torch.Tensor) -> torch.Tensor:
        """Evaluate on a 1-D float64 tensor of leaf values (differentiable)."""
        if leaves.shape != (self.layout.size,):
            raise ValueError(
                f"Expected {self.layout.size} leaf values, got shape {tuple(leaves.shape)}"
            )
        values: List[torch.Tensor] = []
        for index, node in enumerate(self.nodes):
            values.append(self._apply(index, node, values, leaves))
        return values[self.output]

    def __call__(self, leaves: torch.Tensor) -> torch.Tensor:
        return self.forward(leaves)

    def _apply(self, index: int, node: Node, values: List[torch.Tensor], leaves: torch.Tensor) -> torch.Tensor:
        op = node.op
        operands = [values[a] for a in node.args]
        if op == 'leaf':
            return leaves[int(node.value)]
        if op == 'const':
            return torch.tensor(float(node.value), dtype=torch.float64)
        if op in UNARY:
            return UNARY[op](operands[0])
        if op in BINARY:
            return BINARY[op](operands[0], operands[1])
        if op == 'div':
            return _check_div(index, operands[0], operands[1])
        if op == 'pow':
            return _check_pow(index, operands[0], operands[1])
        if op == 'log':
            return _check_log(index, operands[0])
        if op == 'sqrt':
            return _check_sqrt(index, operands[0])
        if op == 'leaky_relu':
            slope = LEAKY_RELU_SLOPE if node.value is None else float(node.value)
            return F.leaky_relu(operands[0], negative_slope=slope)
        if op == 'solve':
            return _solve_component(index, operands, int(node.value))
        raise ValueError(f"Unhandled primitive {op!r}")


class Term:
    """Handle to a node inside an ``ExpressionBuilder``; supports arithmetic."""

    def __init__(self, builder: 'ExpressionBuilder', index: int):
        self.builder = builder
        self.index = index

    def _lift(self, other: Union['Term', float]) -> 'Term':
        if isinstance(other, Term):
            return other
        return self.builder.const(float(other))

    def __add__(self, other):
        return self.builder.op('add', self, self._lift(other))

    def __radd__(self, other):
        return self.builder.op('add', self._lift(other), self)

    def __sub__(self, other):
        return self.builder.op('sub', self, self._lift(other))

    def __rsub__(self, other):
        return self.builder.op('sub', self._lift(other), self)

    def __mul__(self, other):
        return self.builder.op('mul', self, self._lift(other))

    def __rmul__(self, other):
        return self.builder.op('mul', self._lift(other), self)

    def __truediv__(self, other):
        return self.builder.op('div', self, self._lift(other))

    def __rtruediv__(self, other):
        return self.builder.op('div', self._lift(other), self)

    def __pow__(self, other):
        return self.builder.op('pow', self, self._lift(other))

    def __neg__(self):
        return self.builder.op('neg', self)


class ExpressionBuilder:
    """
    Incrementally builds an ``Expression``.

    Example:
        b = ExpressionBuilder(SlotLayout(n_coordinates=1, n_velocities=1))
        q, qd = b.coordinate(0), b.velocity(0)
        expr = b.build(qd * qd / 2 - q * q / 2)
    """

    def __init__(self, layout: SlotLayout):
        self.layout = layout
        self._nodes: List[Node] = []

    def _push(self, node: Node) -> Term:
        self._nodes.append(node)
        return Term(self, len(self._nodes) - 1)

    def slot(self, index: int) -> Term:
        return self._push(Node('leaf', (), float(index)))

    def coordinate(self, i: int) -> Term:
        return self.slot(self.layout.coordinates[i])

    def velocity(self, i: int) -> Term:
        return self.slot(self.layout.velocities[i])

    def time(self) -> Term:
        if not self.layout.has_time:
            raise ValueError("Layout has no time slot")
        return self.slot(self.layout.time[0])

    def parameter(self, i: int) -> Term:
        return self.slot(self.layout.parameters[i])

    def const(self, value: float) -> Term:
        return self._push(Node('const', (), float(value)))

    def op(self, name: str, *args: Term, value: Optional[float] = None) -> Term:
        return self._push(Node(name, tuple(a.index for a in args), value))

    def exp(self, x: Term) -> Term:
        return self.op('exp', x)

    def log(self, x: Term) -> Term:
        return self.op('log', x)

    def sin(self, x: Term) -> Term:
        return self.op('sin', x)

    def cos(self, x: Term) -> Term:
        return self.op('cos', x)

    def sqrt(self, x: Term) -> Term:
        return self.op('sqrt', x)

    def tanh(self, x: Term) -> Term:
        return self.op('tanh', x)

    def softplus(self, x: Term) -> Term:
        return self.op('softplus', x)

    def leaky_relu(self, x: Term, slope: float = LEAKY_RELU_SLOPE) -> Term:
        return self.op('leaky_relu', x, value=slope)

    def sign(self, x: Term) -> Term:
        return self.op('sign', x)

    def abs(self, x: Term) -> Term:
        return self.op('abs', x)

    def solve(self, matrix: Sequence[Sequence[Term]], rhs: Sequence[Term]) -> List[Term]:
        """Return the components of ``matrix⁻¹ rhs`` as terms."""
        k = len(rhs)
        if len(matrix) != k or any(len(row) != k for row in matrix):
            raise ValueError("solve needs a square matrix matching the right-hand side")
        operands = [entry for row in matrix for entry in row] + list(rhs)
        return [self.op('solve', *operands, value=float(c)) for c in range(k)]

    def build(self, output: Term) -> Expression:
        return Expression(self.layout, tuple(self._nodes), output.index)


def evaluate(expr: Expression, leaf_values: Sequence[float]) -> float:
    """
    Evaluate an expression at the given leaf values.

    Raises:
        DomainError: log of non-positive, division by zero, etc. The error
            carries the offending node index.
    """
    leaves = torch.as_tensor(leaf_values, dtype=torch.float64)
    with torch.no_grad():
        return float(expr.forward(leaves))
