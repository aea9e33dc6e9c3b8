#!/usr/bin/env python3
"""
Dynamical Systems Registry

Ground-truth force fields with their analytic split into a conservative
part f_c and a non-conservative part f_n. Forces are accelerations q̈.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from src.errors import ConfigError, SingularityError

SINGULAR_DISTANCE = 1e-9


@dataclass(frozen=True)
class State:
    """Generalized coordinates, velocities and time of an n-DOF system."""
    q: np.ndarray
    qdot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=np.float64))
        qdot = np.atleast_1d(np.asarray(self.qdot, dtype=np.float64))
        if q.shape != qdot.shape or q.ndim != 1:
            raise ValueError(f"q and qdot must be vectors of equal length, got {q.shape} and {qdot.shape}")
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'qdot', qdot)
        object.__setattr__(self, 't', float(self.t))

    @property
    def n(self) -> int:
        return self.q.shape[0]


@dataclass(frozen=True)
class ForceSample:
    """A state with its oracle acceleration and, when known, the true split."""
    state: State
    f: np.ndarray
    f_c_true: Optional[np.ndarray] = None
    f_n_true: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'f', np.atleast_1d(np.asarray(self.f, dtype=np.float64)))
        for name in ('f_c_true', 'f_n_true'):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, np.atleast_1d(np.asarray(value, dtype=np.float64)))
        if self.has_truth and not np.allclose(self.f, self.f_c_true + self.f_n_true, rtol=0.0, atol=1e-12):
            raise ValueError("f must equal f_c_true + f_n_true")

    @property
    def has_truth(self) -> bool:
        return self.f_c_true is not None and self.f_n_true is not None


ForceFunction = Callable[[Mapping[str, float], np.ndarray, np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class SystemDefinition:
    """Registry entry: defaults plus the split force law (vectorized over rows)."""
    name: str
    defaults: Dict[str, float]
    n: int
    time_dependent: bool
    force: ForceFunction
    description: str = ""
    initial_state: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None
    step_size: Optional[float] = None
    n_steps: Optional[int] = None


@dataclass(frozen=True)
class SystemSpec:
    """A concrete system: name, physical constants, DOF and time dependence."""
    name: str
    params: Mapping[str, float]
    n: int
    time_dependent: bool

    @property
    def definition(self) -> SystemDefinition:
        return SYSTEMS[self.name]


def _zeros(q: np.ndarray) -> np.ndarray:
    return np.zeros_like(q)


def _ho(p, q, qd, t):
    return -p['k'] * q, _zeros(q)


def _ho_mf(p, q, qd, t):
    rotation = np.stack([qd[..., 1], -qd[..., 0]], axis=-1)
    return -p['k'] * q + p['B'] * rotation, _zeros(q)


def _ho_cg(p, q, qd, t):
    return -p['k'] * q - p['g'], _zeros(q)


def _ho_ld(p, q, qd, t):
    return -p['k'] * q, -p['gamma'] * qd


def _ho_cd(p, q, qd, t):
    return -p['k'] * q, -p['gamma'] * np.sign(qd)


def _ho_pf(p, q, qd, t):
    return -p['k'] * q, p['a'] * np.sin(t)[..., None] * np.ones_like(q)


def _double_pendulum(p, q, qd, t):
    m1, m2, g, l1, l2 = p['m1'], p['m2'], p['g'], p['l1'], p['l2']
    th1, th2 = q[..., 0], q[..., 1]
    w1, w2 = qd[..., 0], qd[..., 1]
    delta = th2 - th1
    sin_d, cos_d = np.sin(delta), np.cos(delta)
    den1 = (m1 + m2) * l1 - m2 * l1 * cos_d ** 2
    den2 = (l2 / l1) * den1
    a1 = (m2 * l1 * w1 ** 2 * sin_d * cos_d
          + m2 * g * np.sin(th2) * cos_d
          + m2 * l2 * w2 ** 2 * sin_d
          - (m1 + m2) * g * np.sin(th1)) / den1
    a2 = (-m2 * l2 * w2 ** 2 * sin_d * cos_d
          + (m1 + m2) * (g * np.sin(th1) * cos_d - l1 * w1 ** 2 * sin_d - g * np.sin(th2))) / den2
    return np.stack([a1, a2], axis=-1), -p['gamma'] * qd


def _inverse_cube(r: np.ndarray, what: str) -> np.ndarray:
    distance = np.linalg.norm(r, axis=-1)
    if np.any(distance < SINGULAR_DISTANCE):
        raise SingularityError(f"{what} distance below {SINGULAR_DISTANCE}", min_distance=float(distance.min()))
    return r / distance[..., None] ** 3


def neptune_position(p: Mapping[str, float], t: np.ndarray) -> np.ndarray:
    """Neptune's position on its circular orbit at time(s) t."""
    angle = p['omega_n'] * np.asarray(t, dtype=np.float64)
    return p['r_n'] * np.stack([np.cos(angle), np.sin(angle)], axis=-1)


def _neptune(p, q, qd, t):
    f_c = -p['G'] * p['M_sun'] * _inverse_cube(q, "Uranus-Sun")
    f_n = p['G'] * p['M_n'] * _inverse_cube(neptune_position(p, t) - q, "Uranus-Neptune")
    return f_c, f_n


def radiation_drag_coefficient(p: Mapping[str, float]) -> float:
    """Amplitude of the −(ẋ²+ẏ²)⁴·v back-reaction acceleration."""
    m1, m2 = p['M1'], p['M2']
    return 32.0 * m1 * m2 * (m1 ** 2 + m2 ** 2) / (5.0 * p['G'] * p['c'] ** 5 * (m1 + m2) ** 5)


def _grav_radiation(p, q, qd, t):
    f_c = -p['G'] * (p['M1'] + p['M2']) * _inverse_cube(q, "binary separation")
    speed_sq = np.sum(qd ** 2, axis=-1, keepdims=True)
    return f_c, -radiation_drag_coefficient(p) * speed_sq ** 4 * qd


def double_pendulum_lagrangian(p: Mapping[str, float], q: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """T − V of the double pendulum (angles from the downward vertical)."""
    m1, m2, g, l1, l2 = p['m1'], p['m2'], p['g'], p['l1'], p['l2']
    th1, th2, w1, w2 = q[..., 0], q[..., 1], qd[..., 0], qd[..., 1]
    kinetic = (0.5 * (m1 + m2) * l1 ** 2 * w1 ** 2 + 0.5 * m2 * l2 ** 2 * w2 ** 2
               + m2 * l1 * l2 * w1 * w2 * np.cos(th1 - th2))
    potential = -(m1 + m2) * g * l1 * np.cos(th1) - m2 * g * l2 * np.cos(th2)
    return kinetic - potential


def double_pendulum_energy(p: Mapping[str, float], q: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """T + V, offset so the hanging rest state has zero energy."""
    m1, m2, g, l1, l2 = p['m1'], p['m2'], p['g'], p['l1'], p['l2']
    th1, th2, w1, w2 = q[..., 0], q[..., 1], qd[..., 0], qd[..., 1]
    kinetic = (0.5 * (m1 + m2) * l1 ** 2 * w1 ** 2 + 0.5 * m2 * l2 ** 2 * w2 ** 2
               + m2 * l1 * l2 * w1 * w2 * np.cos(th1 - th2))
    potential = (m1 + m2) * g * l1 * (1.0 - np.cos(th1)) + m2 * g * l2 * (1.0 - np.cos(th2))
    return kinetic + potential


SYSTEMS: Dict[str, SystemDefinition] = {
    'HO': SystemDefinition('HO', {'k': 1.0}, 1, False, _ho,
                           "Harmonic oscillator q̈ = −kq"),
    'HO+MF': SystemDefinition('HO+MF', {'k': 1.0, 'B': 1.0}, 2, False, _ho_mf,
                              "Harmonic oscillator in a magnetic field"),
    'HO+CG': SystemDefinition('HO+CG', {'k': 1.0, 'g': 1.0}, 1, False, _ho_cg,
                              "Harmonic oscillator under constant gravity"),
    'HO+LD': SystemDefinition('HO+LD', {'k': 1.0, 'gamma': 0.5}, 1, False, _ho_ld,
                              "Harmonic oscillator with linear damping"),
    'HO+CD': SystemDefinition('HO+CD', {'k': 1.0, 'gamma': 0.5}, 1, False, _ho_cd,
                              "Harmonic oscillator with constant (Coulomb) damping"),
    'HO+PF': SystemDefinition('HO+PF', {'k': 1.0, 'a': 0.5}, 1, True, _ho_pf,
                              "Harmonic oscillator with a periodic drive"),
    'damped-double-pendulum': SystemDefinition(
        'damped-double-pendulum',
        {'m1': 1.0, 'm2': 1.0, 'g': 1.0, 'l1': 1.0, 'l2': 1.0, 'gamma': 0.02},
        2, False, _double_pendulum,
        "Double pendulum with linear friction",
        initial_state=((1.0, 0.0), (0.0, 0.0)), step_size=0.1, n_steps=300,
    ),
    'neptune': SystemDefinition(
        'neptune',
        {'G': 1.0, 'M_sun': 1.0, 'M_n': 0.005, 'r_n': 3.0, 'omega_n': 3.0 ** -1.5},
        2, True, _neptune,
        "Uranus around a fixed Sun, perturbed by Neptune on a circular orbit",
        initial_state=((2.0, 0.0), (0.0, 2.0 ** -0.5)), step_size=0.1, n_steps=1000,
    ),
    'grav-radiation': SystemDefinition(
        'grav-radiation',
        {'G': 1.0, 'M1': 1.0, 'M2': 1.0, 'c': 3.0},
        2, False, _grav_radiation,
        "Inspiraling binary with gravitational-wave back-reaction (relative coordinates)",
        initial_state=((0.0, 2.0), (-1.0, 0.0)), step_size=0.05, n_steps=300,
    ),
}


def list_systems() -> list:
    return sorted(SYSTEMS)


def get_system(name: str, overrides: Optional[Mapping[str, float]] = None) -> SystemSpec:
    """
    Build a ``SystemSpec`` from the registry.

    Raises:
        ConfigError: unknown system or an override naming a constant the
            system does not have.
    """
    if name not in SYSTEMS:
        raise ConfigError(f"Unknown system {name!r}", known=list_systems())
    definition = SYSTEMS[name]
    params = dict(definition.defaults)
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ConfigError(f"System {name!r} has no constant {key!r}", known=sorted(params))
        params[key] = float(value)
    return SystemSpec(name, params, definition.n, definition.time_dependent)


def true_forces(spec: SystemSpec, q: np.ndarray, qd: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``true_force`` over rows of q, qd (shape (N, n)) and t (N,)."""
    q = np.asarray(q, dtype=np.float64)
    qd = np.asarray(qd, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if q.shape[-1] != spec.n or qd.shape != q.shape:
        raise ValueError(f"{spec.name} expects states of dimension {spec.n}")
    f_c, f_n = spec.definition.force(spec.params, q, qd, t)
    return f_c + f_n, f_c, f_n


def true_force(spec: SystemSpec, state: State) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Ground-truth acceleration at a state and its conservative/non-conservative split.

    Returns:
        (f, f_c, f_n) with f = f_c + f_n

    Raises:
        SingularityError: Neptune/radiation evaluated at a collision.
    """
    if state.n != spec.n:
        raise ValueError(f"{spec.name} expects {spec.n} degrees of freedom, got {state.n}")
    f, f_c, f_n = true_forces(spec, state.q[None, :], state.qdot[None, :], np.array([state.t]))
    return f[0], f_c[0], f_n[0]


def force_sample(spec: SystemSpec, state: State) -> ForceSample:
    f, f_c, f_n = true_force(spec, state)
    return ForceSample(state, f, f_c, f_n)
