#!/usr/bin/env python3
"""
Template Fitting

Bounded Nelder–Mead fits of a force template to target forces (normally
the trained UAN's outputs on the training states), with seeded random
restarts that may run on a thread pool.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
from scipy.optimize import minimize

from src.errors import FitFailedError
from src.symbolic.templates import Template

logger = logging.getLogger(__name__)

DEFAULT_RESTARTS = 20
MIN_POINTS_PER_PARAM = 10
SIMPLEX_OPTIONS = {'xatol': 1e-10, 'fatol': 1e-18, 'maxiter': 20000, 'maxfev': 40000}


@dataclass(frozen=True)
class FitData:
    """States and the force values to explain, all numpy arrays."""
    q: np.ndarray
    qd: np.ndarray
    t: np.ndarray
    target: np.ndarray

    def __len__(self) -> int:
        return self.q.shape[0]

    @classmethod
    def from_samples(cls, samples, target: np.ndarray) -> 'FitData':
        return cls(
            q=np.stack([s.state.q for s in samples]),
            qd=np.stack([s.state.qdot for s in samples]),
            t=np.array([s.state.t for s in samples], dtype=np.float64),
            target=np.asarray(target, dtype=np.float64),
        )


@dataclass(frozen=True)
class FitResult:
    template: str
    params: Dict[str, float]
    rms_residual: float
    n_points: int
    restart: int = 0

    def to_dict(self) -> dict:
        return {
            'template': self.template,
            'params': dict(self.params),
            'rms_residual': self.rms_residual,
            'n_points': self.n_points,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'FitResult':
        return cls(data['template'], dict(data['params']), float(data['rms_residual']), int(data['n_points']))

    def save_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2)
        return path


def _to_external(template: Template, x: np.ndarray) -> np.ndarray:
    return np.array([10.0 ** v if log else v for v, log in zip(x, template.log_scale)])


def _internal_bounds(template: Template) -> List[tuple]:
    return [(np.log10(lo), np.log10(hi)) if log else (lo, hi)
            for (lo, hi), log in zip(template.bounds, template.log_scale)]


def residual_report(template: Template, params, data: FitData) -> np.ndarray:
    """Template minus target at every point, shape (N, n)."""
    if isinstance(params, dict):
        params = template.params_vector(params)
    return template.evaluate(params, data.q, data.qd, data.t) - data.target


def _mse(template: Template, params: np.ndarray, data: FitData) -> float:
    with np.errstate(all='ignore'):
        value = float(np.mean(np.square(residual_report(template, params, data))))
    return value if np.isfinite(value) else np.inf


def _run_restart(template: Template, data: FitData, x0: np.ndarray, bounds: List[tuple]):
    objective = lambda x: _mse(template, _to_external(template, x), data)
    return minimize(objective, x0, method='Nelder-Mead', bounds=bounds, options=SIMPLEX_OPTIONS)


def fit_template(template: Template, data: FitData, seed: int = 0, restarts: int = DEFAULT_RESTARTS,
                 threads: int = 1) -> FitResult:
    """
    Minimize the mean squared deviation between template and targets.

    Restart initial points are drawn uniformly inside the bounds (log-uniform
    for log-scale parameters) from one seeded generator, so the result does
    not depend on ``threads``. Ties go to the lowest restart index.

    Raises:
        ValueError: fewer than 10 points per free parameter
        FitFailedError: no restart beats the zero template; carries the best
            result found
    """
    k = len(template.param_names)
    if len(data) < MIN_POINTS_PER_PARAM * k:
        raise ValueError(f"Need at least {MIN_POINTS_PER_PARAM * k} points to fit {k} parameters")

    bounds = _internal_bounds(template)
    rng = np.random.default_rng(seed)
    lows = np.array([lo for lo, _ in bounds])
    highs = np.array([hi for _, hi in bounds])
    starts = [lows + rng.random(k) * (highs - lows) for _ in range(restarts)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda x0: _run_restart(template, data, x0, bounds), starts))
    else:
        outcomes = [_run_restart(template, data, x0, bounds) for x0 in starts]

    best_index, best = 0, outcomes[0]
    for index, outcome in enumerate(outcomes[1:], start=1):
        if outcome.fun < best.fun:
            best_index, best = index, outcome

    params = _to_external(template, best.x)
    result = FitResult(template.name, template.params_dict(params), float(np.sqrt(best.fun)), len(data), best_index)
    zero_mse = float(np.mean(np.square(data.target)))
    if not best.fun < zero_mse:
        raise FitFailedError(f"No restart of {template.name} beat the zero template", best=result,
                             zero_rms=float(np.sqrt(zero_mse)))
    logger.info("Fitted %s: %s (rms residual %.3g, restart %d)", template.name,
                ", ".join(f"{k}={v:.6g}" for k, v in result.params.items()), result.rms_residual, best_index)
    return result


def save_residuals_csv(residuals: np.ndarray, path: Union[str, Path]) -> Path:
    residuals = np.asarray(residuals).reshape(len(residuals), -1)
    header = ','.join(f"residual_{i + 1}" for i in range(residuals.shape[1]))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, residuals, fmt='%.17g', delimiter=',', header=header, comments='', newline='\n',
               encoding='utf-8')
    return path
