#!/usr/bin/env python3
"""
Phase-Transition Inequalities

Sample-set checks of the bounds behind the λ = 1 phase transition. With
‖x‖ = (mean |x|^p)^(1/p) over all components and d = f − f_c:

    λ > 1:  ‖d − f_n‖ + λ‖f_n‖ ≥ ‖d‖ + (λ − 1)‖f_n‖
    λ < 1:  min over f_n of ‖d − f_n‖ + λ‖f_n‖ = λ‖d‖, attained at f_n = d
"""

import numpy as np

TOLERANCE = 1e-9


def sample_norm(x: np.ndarray, p: int) -> float:
    x = np.abs(np.asarray(x, dtype=np.float64))
    if p == 1:
        return float(np.mean(x))
    return float(np.mean(x ** p) ** (1.0 / p))


def decomposition_objective(f: np.ndarray, f_c: np.ndarray, f_n: np.ndarray, lam: float, p: int) -> float:
    """L_e + λ·L_b of a candidate decomposition on a finite sample set."""
    f, f_c, f_n = (np.asarray(a, dtype=np.float64) for a in (f, f_c, f_n))
    return sample_norm(f_c + f_n - f, p) + lam * sample_norm(f_n, p)


def theorem1_inequality_check(f: np.ndarray, f_c: np.ndarray, f_n: np.ndarray, lam: float, p: int,
                              tol: float = TOLERANCE) -> bool:
    """
    True when the bound for this side of λ = 1 holds on the samples.

    For λ < 1 the interpolating candidate f_n = d must reach λ‖d‖ and the
    given candidate must not go below it.

    Raises:
        ValueError: λ = 1
    """
    if lam == 1.0:
        raise ValueError("The check is defined for λ ≠ 1")
    f, f_c, f_n = (np.asarray(a, dtype=np.float64) for a in (f, f_c, f_n))
    d = f - f_c
    total = decomposition_objective(f, f_c, f_n, lam, p)
    norm_d = sample_norm(d, p)
    scale = max(1.0, abs(total), norm_d)

    if lam > 1.0:
        bound = norm_d + (lam - 1.0) * sample_norm(f_n, p)
        return bool(total >= bound - tol * scale)

    interpolated = decomposition_objective(f, f_c, d, lam, p)
    return bool(abs(interpolated - lam * norm_d) <= tol * scale and total >= lam * norm_d - tol * scale)
