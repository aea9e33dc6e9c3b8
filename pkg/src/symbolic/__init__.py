"""Closed-form templates fitted to the learned non-conservative force."""

from .templates import (
    TEMPLATE_FACTORIES,
    Template,
    get_template,
    linear_friction_template,
    neptune_pull_template,
    power_law_drag_template,
)
from .fitting import FitData, FitResult, fit_template, residual_report, save_residuals_csv
from .explain import explain, uan_outputs

__all__ = [
    'TEMPLATE_FACTORIES',
    'Template',
    'get_template',
    'linear_friction_template',
    'neptune_pull_template',
    'power_law_drag_template',
    'FitData',
    'FitResult',
    'fit_template',
    'residual_report',
    'save_residuals_csv',
    'explain',
    'uan_outputs',
]
