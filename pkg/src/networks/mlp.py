#!/usr/bin/env python3
"""
Feedforward Networks on Flat Parameters

Multilayer perceptrons evaluated directly from a ParamVector, so parameter
gradients and input derivatives of any order come from torch autograd.
Used for the UAN branch and for the black-box Lagrangian.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import torch
import torch.nn.functional as F

from src.dynamics.systems import State
from src.networks.params import ParamVector, Segment

LEAKY_RELU_SLOPE = 0.2


class Activation(Enum):
    LEAKY_RELU = "leaky-relu"
    SOFTPLUS = "softplus"
    QUADRATIC = "quadratic"


class Init(Enum):
    UNIFORM_FAN_IN = "uniform-fan-in"
    ZERO_LAST_LAYER = "zero-last-layer"


@dataclass(frozen=True)
class MlpSpec:
    """
    Architecture of a fully connected network.

    Args:
        input_dim: Input width
        hidden: Hidden layer widths
        activation: Activation of the hidden neurons
        quadratic_fraction: Share of each hidden layer using x² instead of
            ``activation`` (the x² neurons are the last ones of the layer)
        output_dim: Output width (linear output layer)
        init: Initialization scheme
        negative_slope: Leaky-relu slope
    """
    input_dim: int
    hidden: Tuple[int, ...] = (200, 200)
    activation: Activation = Activation.LEAKY_RELU
    quadratic_fraction: float = 0.0
    output_dim: int = 1
    init: Init = Init.ZERO_LAST_LAYER
    negative_slope: float = LEAKY_RELU_SLOPE

    def __post_init__(self):
        object.__setattr__(self, 'hidden', tuple(int(w) for w in self.hidden))
        object.__setattr__(self, 'activation', Activation(self.activation))
        object.__setattr__(self, 'init', Init(self.init))
        if self.input_dim < 1 or self.output_dim < 1 or any(w < 1 for w in self.hidden):
            raise ValueError("Layer widths must be at least 1")
        if not 0.0 <= self.quadratic_fraction <= 1.0:
            raise ValueError(f"quadratic_fraction must lie in [0, 1], got {self.quadratic_fraction}")

    @property
    def widths(self) -> Tuple[int, ...]:
        return (self.input_dim,) + self.hidden + (self.output_dim,)

    def layout(self) -> Tuple[Segment, ...]:
        segments = []
        widths = self.widths
        for i in range(len(widths) - 1):
            segments.append((f"layer{i}.weight", (widths[i + 1], widths[i])))
            segments.append((f"layer{i}.bias", (widths[i + 1],)))
        return tuple(segments)

    def n_quadratic(self, width: int) -> int:
        if self.activation is Activation.QUADRATIC:
            return width
        return int(round(width * self.quadratic_fraction))

    def to_dict(self) -> dict:
        return {
            'input_dim': self.input_dim,
            'hidden': list(self.hidden),
            'activation': self.activation.value,
            'quadratic_fraction': self.quadratic_fraction,
            'output_dim': self.output_dim,
            'init': self.init.value,
            'negative_slope': self.negative_slope,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'MlpSpec':
        return cls(
            input_dim=data['input_dim'],
            hidden=tuple(data.get('hidden', (200, 200))),
            activation=Activation(data.get('activation', Activation.LEAKY_RELU.value)),
            quadratic_fraction=data.get('quadratic_fraction', 0.0),
            output_dim=data.get('output_dim', 1),
            init=Init(data.get('init', Init.ZERO_LAST_LAYER.value)),
            negative_slope=data.get('negative_slope', LEAKY_RELU_SLOPE),
        )


def _activate(spec: MlpSpec, z: torch.Tensor) -> torch.Tensor:
    width = z.shape[-1]
    n_quad = spec.n_quadratic(width)
    if n_quad == width:
        return z * z
    if spec.activation is Activation.SOFTPLUS:
        base = F.softplus(z[..., :width - n_quad])
    else:
        base = F.leaky_relu(z[..., :width - n_quad], negative_slope=spec.negative_slope)
    if n_quad == 0:
        return base
    quad = z[..., width - n_quad:]
    return torch.cat([base, quad * quad], dim=-1)


def mlp_apply(params: ParamVector, spec: MlpSpec, x: torch.Tensor) -> torch.Tensor:
    """Evaluate the network on a (..., input_dim) tensor."""
    if x.shape[-1] != spec.input_dim:
        raise ValueError(f"Network expects input width {spec.input_dim}, got {x.shape[-1]}")
    tensors = params.segments()
    n_layers = len(tensors) // 2
    h = x
    for i in range(n_layers):
        weight, bias = tensors[2 * i], tensors[2 * i + 1]
        h = h @ weight.T + bias
        if i < n_layers - 1:
            h = _activate(spec, h)
    return h


def init_mlp(spec: MlpSpec, seed: int) -> ParamVector:
    """Uniform ±1/√fan_in for every layer; zero output layer when requested."""
    generator = torch.Generator().manual_seed(int(seed))
    chunks = []
    layout = spec.layout()
    last = len(layout) - 2
    for index, (name, shape) in enumerate(layout):
        fan_in = spec.widths[index // 2]
        if spec.init is Init.ZERO_LAST_LAYER and index >= last:
            chunks.append(torch.zeros(math.prod(shape), dtype=torch.float64))
            continue
        bound = 1.0 / math.sqrt(fan_in)
        chunk = torch.rand(math.prod(shape), generator=generator, dtype=torch.float64)
        chunks.append((2.0 * chunk - 1.0) * bound)
    return ParamVector(torch.cat(chunks), layout)


def uan_input(state_q: torch.Tensor, state_qd: torch.Tensor, t: torch.Tensor, spec: MlpSpec) -> torch.Tensor:
    """
    (q, q̇, t) when the network takes time, (q, q̇) otherwise.

    Raises:
        ValueError: input_dim matches neither layout
    """
    n = state_q.shape[-1]
    if spec.input_dim == 2 * n:
        return torch.cat([state_q, state_qd], dim=-1)
    if spec.input_dim == 2 * n + 1:
        return torch.cat([state_q, state_qd, t.reshape(state_q.shape[:-1] + (1,))], dim=-1)
    raise ValueError(f"UAN input_dim {spec.input_dim} does not fit a {n}-DOF state")


def uan_forward_batch(params: ParamVector, spec: MlpSpec, q: torch.Tensor, qd: torch.Tensor,
                      t: torch.Tensor) -> torch.Tensor:
    """f_n^NN for a batch: q, qd of shape (B, n), t of shape (B,)."""
    out = mlp_apply(params, spec, uan_input(q, qd, t, spec))
    if out.shape[-1] != q.shape[-1]:
        raise ValueError(f"UAN output_dim {spec.output_dim} does not match {q.shape[-1]} DOF")
    return out


def uan_forward(params: ParamVector, spec: MlpSpec, state: State) -> torch.Tensor:
    q = torch.as_tensor(state.q, dtype=torch.float64)[None, :]
    qd = torch.as_tensor(state.qdot, dtype=torch.float64)[None, :]
    t = torch.tensor([state.t], dtype=torch.float64)
    return uan_forward_batch(params, spec, q, qd, t)[0]


def default_uan_spec(n: int, time_input: bool, hidden: Tuple[int, ...] = (200, 200)) -> MlpSpec:
    return MlpSpec(
        input_dim=2 * n + int(time_input),
        hidden=hidden,
        activation=Activation.LEAKY_RELU,
        output_dim=n,
        init=Init.ZERO_LAST_LAYER,
    )
