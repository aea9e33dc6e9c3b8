#!/usr/bin/env python3
"""
Lagrangian Networks

The conservative branch. A Lagrangian ℒ(q, q̇) is either a black-box MLP
plus the fixed kinetic offset ½·a·q̇ᵀq̇, or a linear combination of
closed-form features. Forces follow from the Euler–Lagrange equation

    f_c = H⁻¹ (∇_q ℒ − M q̇),   H[i][j] = ∂²ℒ/∂q̇ᵢ∂q̇ⱼ,   M[i][j] = ∂²ℒ/∂q̇ᵢ∂qⱼ

with all derivatives exact and the whole map differentiable in the
parameters.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional, Tuple, Union

import torch

from src.autodiff.derivatives import batch_input_grad, batch_jacobian, solve
from src.dynamics.systems import State
from src.networks.mlp import Activation, Init, MlpSpec, init_mlp, mlp_apply
from src.networks.params import ParamVector

TEMPLATE_INIT = 0.1


class LagrangianMode(Enum):
    BLACK_BOX_MLP = "black-box-mlp"
    SYMBOLIC_TEMPLATE = "symbolic-template"


@dataclass(frozen=True)
class LagrangianTemplate:
    """Closed-form features φ_k(q, q̇); ℒ = Σ c_k φ_k."""
    name: str
    n: int
    feature_names: Tuple[str, ...]
    features: Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


def _double_pendulum_features(q: torch.Tensor, qd: torch.Tensor) -> torch.Tensor:
    th1, th2, w1, w2 = q[:, 0], q[:, 1], qd[:, 0], qd[:, 1]
    return torch.stack([
        torch.cos(th1),
        torch.cos(th2),
        w1 * w1,
        w2 * w2,
        w1 * w2 * torch.cos(th1 - th2),
    ], dim=-1)


def _kepler_features(q: torch.Tensor, qd: torch.Tensor) -> torch.Tensor:
    radius = torch.sqrt(q[:, 0] ** 2 + q[:, 1] ** 2)
    return torch.stack([qd[:, 0] ** 2, qd[:, 1] ** 2, 1.0 / radius], dim=-1)


LAGRANGIAN_TEMPLATES: Dict[str, LagrangianTemplate] = {
    'double-pendulum': LagrangianTemplate(
        'double-pendulum', 2,
        ('cos(theta1)', 'cos(theta2)', 'theta1_dot^2', 'theta2_dot^2', 'theta1_dot*theta2_dot*cos(theta1-theta2)'),
        _double_pendulum_features,
    ),
    'kepler': LagrangianTemplate(
        'kepler', 2,
        ('x_dot^2', 'y_dot^2', '1/sqrt(x^2+y^2)'),
        _kepler_features,
    ),
}


@dataclass(frozen=True)
class LagrangianModel:
    """
    Conservative branch description.

    Args:
        mode: Black-box MLP or symbolic template
        n: Degrees of freedom
        mlp: Network spec (black-box mode), input 2n and output 1
        template: Feature set (template mode)
        split_a: Coefficient of the fixed ½·a·q̇ᵀq̇ term
    """
    mode: LagrangianMode
    n: int
    mlp: Optional[MlpSpec] = None
    template: Optional[LagrangianTemplate] = None
    split_a: float = 1.0

    def __post_init__(self):
        if self.split_a < 0:
            raise ValueError("split_a must be non-negative")
        if self.mode is LagrangianMode.BLACK_BOX_MLP:
            if self.mlp is None:
                raise ValueError("Black-box Lagrangian needs an MlpSpec")
            if self.mlp.input_dim != 2 * self.n or self.mlp.output_dim != 1:
                raise ValueError("Lagrangian MLP must map 2n inputs to one output")
        else:
            if self.template is None:
                raise ValueError("Template Lagrangian needs a feature set")
            if self.template.n != self.n:
                raise ValueError(f"Template {self.template.name} is for {self.template.n} DOF")

    @classmethod
    def black_box(cls, n: int, hidden: Tuple[int, ...] = (200, 200), quadratic_fraction: float = 0.5,
                  split_a: float = 1.0, init: Init = Init.ZERO_LAST_LAYER) -> 'LagrangianModel':
        spec = MlpSpec(
            input_dim=2 * n,
            hidden=hidden,
            activation=Activation.SOFTPLUS,
            quadratic_fraction=quadratic_fraction,
            output_dim=1,
            init=init,
        )
        return cls(LagrangianMode.BLACK_BOX_MLP, n, mlp=spec, split_a=split_a)

    @classmethod
    def from_template(cls, name: str, split_a: float = 0.0) -> 'LagrangianModel':
        if name not in LAGRANGIAN_TEMPLATES:
            raise ValueError(f"Unknown Lagrangian template {name!r}")
        template = LAGRANGIAN_TEMPLATES[name]
        return cls(LagrangianMode.SYMBOLIC_TEMPLATE, template.n, template=template, split_a=split_a)


def init_params(spec: Union[MlpSpec, LagrangianModel], seed: int) -> ParamVector:
    """
    Seeded initial parameters for a network spec or a Lagrangian model.

    Template coefficients all start at 0.1.
    """
    if isinstance(spec, MlpSpec):
        return init_mlp(spec, seed)
    if spec.mode is LagrangianMode.BLACK_BOX_MLP:
        return init_mlp(spec.mlp, seed)
    k = len(spec.template.feature_names)
    return ParamVector(torch.full((k,), TEMPLATE_INIT, dtype=torch.float64), (('coefficients', (k,)),))


def lagrangian_batch(model: LagrangianModel, params: ParamVector, q: torch.Tensor, qd: torch.Tensor) -> torch.Tensor:
    """ℒ at each row of (q, q̇); shape (B,)."""
    if model.mode is LagrangianMode.BLACK_BOX_MLP:
        value = mlp_apply(params, model.mlp, torch.cat([q, qd], dim=-1))[..., 0]
    else:
        value = model.template.features(q, qd) @ params.values
    if model.split_a:
        value = value + 0.5 * model.split_a * (qd * qd).sum(dim=-1)
    return value


def _leaves(q, qd) -> Tuple[torch.Tensor, torch.Tensor]:
    q = torch.as_tensor(q, dtype=torch.float64).detach().clone().requires_grad_(True)
    qd = torch.as_tensor(qd, dtype=torch.float64).detach().clone().requires_grad_(True)
    return q, qd


def lnn_force_batch(model: LagrangianModel, params: ParamVector, q, qd) -> torch.Tensor:
    """
    f_c^NN at a batch of states, shape (B, n).

    Raises:
        SingularMassMatrixError: H ill-conditioned at some row; the error's
            ``state`` is that row as the vector (q, q̇)
    """
    q, qd = _leaves(q, qd)
    value = lagrangian_batch(model, params, q, qd)
    grad_q = batch_input_grad(value, q)
    grad_qd = batch_input_grad(value, qd)
    hessian = batch_jacobian(grad_qd, qd)
    mixed = batch_jacobian(grad_qd, q)
    rhs = grad_q - (mixed @ qd.detach().unsqueeze(-1)).squeeze(-1)
    rows = torch.cat([q.detach(), qd.detach()], dim=-1)
    return solve(hessian, rhs.unsqueeze(-1), state=rows).squeeze(-1)


def energy_batch(model: LagrangianModel, params: ParamVector, q, qd) -> torch.Tensor:
    """E = ∇_q̇ℒ · q̇ − ℒ at a batch of states, shape (B,)."""
    q, qd = _leaves(q, qd)
    value = lagrangian_batch(model, params, q, qd)
    grad_qd = batch_input_grad(value, qd)
    return (grad_qd * qd.detach()).sum(dim=-1) - value


def _single(state: State) -> Tuple[torch.Tensor, torch.Tensor]:
    return (torch.as_tensor(state.q, dtype=torch.float64)[None, :],
            torch.as_tensor(state.qdot, dtype=torch.float64)[None, :])


def lagrangian_value(model: LagrangianModel, params: ParamVector, state: State) -> torch.Tensor:
    q, qd = _single(state)
    return lagrangian_batch(model, params, q, qd)[0]


def lnn_force(model: LagrangianModel, params: ParamVector, state: State) -> torch.Tensor:
    q, qd = _single(state)
    return lnn_force_batch(model, params, q, qd)[0]


def energy(model: LagrangianModel, params: ParamVector, state: State) -> torch.Tensor:
    q, qd = _single(state)
    return energy_batch(model, params, q, qd)[0]
