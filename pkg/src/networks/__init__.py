"""Lagrangian (conservative) and universal-approximator (residual) branches."""

from .params import ParamVector
from .mlp import (
    Activation,
    Init,
    MlpSpec,
    default_uan_spec,
    init_mlp,
    mlp_apply,
    uan_forward,
    uan_forward_batch,
)
from .lagrangian import (
    LAGRANGIAN_TEMPLATES,
    LagrangianMode,
    LagrangianModel,
    LagrangianTemplate,
    energy,
    energy_batch,
    init_params,
    lagrangian_batch,
    lagrangian_value,
    lnn_force,
    lnn_force_batch,
)

__all__ = [
    'ParamVector',
    'Activation',
    'Init',
    'MlpSpec',
    'default_uan_spec',
    'init_mlp',
    'mlp_apply',
    'uan_forward',
    'uan_forward_batch',
    'LAGRANGIAN_TEMPLATES',
    'LagrangianMode',
    'LagrangianModel',
    'LagrangianTemplate',
    'energy',
    'energy_batch',
    'init_params',
    'lagrangian_batch',
    'lagrangian_value',
    'lnn_force',
    'lnn_force_batch',
]
