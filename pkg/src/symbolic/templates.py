#!/usr/bin/env python3
"""
Force Templates

Closed-form parametric forms for the non-conservative force, used to
explain what the universal approximator learned. Each template maps a
batch of states (q, q̇, t) and a parameter vector to an (N, n) force array.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from src.errors import ConfigError

TemplateFunction = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Template:
    """
    Named free parameters with box bounds and a closed-form evaluator.

    Parameters flagged in ``log_scale`` are searched in log10 space.
    """
    name: str
    param_names: Tuple[str, ...]
    bounds: Tuple[Tuple[float, float], ...]
    log_scale: Tuple[bool, ...]
    function: TemplateFunction
    n: int = 2

    def __post_init__(self):
        k = len(self.param_names)
        if len(self.bounds) != k or len(self.log_scale) != k:
            raise ValueError(f"Template {self.name}: bounds/log_scale must match {k} parameters")
        for (lo, hi), log in zip(self.bounds, self.log_scale):
            if not lo < hi or (log and lo <= 0):
                raise ValueError(f"Template {self.name}: invalid bounds ({lo}, {hi})")

    def evaluate(self, params: Sequence[float], q: np.ndarray, qd: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self.function(np.asarray(params, dtype=np.float64), np.asarray(q, dtype=np.float64),
                             np.asarray(qd, dtype=np.float64), np.asarray(t, dtype=np.float64))

    def params_dict(self, params: Sequence[float]) -> Dict[str, float]:
        return {name: float(value) for name, value in zip(self.param_names, params)}

    def params_vector(self, params: Dict[str, float]) -> np.ndarray:
        missing = set(self.param_names) - set(params)
        if missing:
            raise ValueError(f"Template {self.name} is missing parameters {sorted(missing)}")
        return np.array([params[name] for name in self.param_names], dtype=np.float64)


def _linear_friction(params, q, qd, t):
    matrix = params.reshape(2, 2)
    return -(qd @ matrix.T)


def _neptune_pull(G: float) -> TemplateFunction:
    def evaluate(params, q, qd, t):
        mass, radius, omega = params
        angle = omega * t
        offset = radius * np.stack([np.cos(angle), np.sin(angle)], axis=-1) - q
        distance = np.linalg.norm(offset, axis=-1, keepdims=True)
        return G * mass * offset / distance ** 3
    return evaluate


def _power_law_drag(params, q, qd, t):
    amplitude, exponent = params
    speed_sq = np.sum(qd * qd, axis=-1, keepdims=True)
    return -amplitude * speed_sq ** exponent * qd


def linear_friction_template() -> Template:
    return Template(
        'linear-friction',
        ('a11', 'a12', 'a21', 'a22'),
        ((-1.0, 1.0),) * 4,
        (False,) * 4,
        _linear_friction,
    )


def neptune_pull_template(G: float = 1.0) -> Template:
    return Template(
        'neptune-pull',
        ('M_n', 'r_n', 'omega_n'),
        ((1e-4, 1.0), (0.5, 10.0), (0.01, 1.0)),
        (True, False, False),
        _neptune_pull(G),
    )


def power_law_drag_template() -> Template:
    return Template(
        'power-law-drag',
        ('A', 's'),
        ((1e-6, 1.0), (0.5, 8.0)),
        (True, False),
        _power_law_drag,
    )


TEMPLATE_FACTORIES = {
    'linear-friction': linear_friction_template,
    'neptune-pull': neptune_pull_template,
    'power-law-drag': power_law_drag_template,
}


def get_template(name: str, **constants: float) -> Template:
    """
    Raises:
        ConfigError: unknown template name
    """
    if name not in TEMPLATE_FACTORIES:
        raise ConfigError(f"Unknown template {name!r}", known=sorted(TEMPLATE_FACTORIES))
    return TEMPLATE_FACTORIES[name](**constants)
