#!/usr/bin/env python3
"""
RK4 Integrator

Fixed-step classic Runge-Kutta on the first-order system (q, q̇)' = (q̇, f).
The same rollout serves ground-truth data generation and rollouts of
learned force fields.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from src.dynamics.systems import ForceSample, State, SystemSpec, force_sample, true_force
from src.errors import IntegrationDivergedError, NNPhDError

logger = logging.getLogger(__name__)

Acceleration = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class SimConfig:
    """Initial condition, step size ε, number of steps and seed."""
    initial_state: State
    step_size: float
    n_steps: int
    seed: int = 0

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be at least 1, got {self.n_steps}")


def rk4_rollout(accel: Acceleration, initial_state: State, step_size: float, n_steps: int,
                out: Optional[List[State]] = None) -> List[State]:
    """
    Integrate q̈ = accel(q, q̇, t) with classic RK4.

    Args:
        accel: Acceleration function of (q, qdot, t)
        initial_state: State at step 0
        step_size: ε
        n_steps: Number of steps
        out: List to append states to; keeps the partial trajectory when
            the rollout fails

    Returns:
        n_steps + 1 states including the initial one

    Raises:
        IntegrationDivergedError: a stage or the new state is not finite
    """
    h = float(step_size)
    q, v, t = initial_state.q.copy(), initial_state.qdot.copy(), initial_state.t
    states = out if out is not None else []
    states.append(initial_state)

    for step in range(1, n_steps + 1):
        try:
            k1q, k1v = v, accel(q, v, t)
            k2q, k2v = v + 0.5 * h * k1v, accel(q + 0.5 * h * k1q, v + 0.5 * h * k1v, t + 0.5 * h)
            k3q, k3v = v + 0.5 * h * k2v, accel(q + 0.5 * h * k2q, v + 0.5 * h * k2v, t + 0.5 * h)
            k4q, k4v = v + h * k3v, accel(q + h * k3q, v + h * k3v, t + h)
        except NNPhDError as e:
            raise e.annotate(step=step)

        q = q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        t = initial_state.t + step * h

        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise IntegrationDivergedError("RK4 state became non-finite", step=step)
        states.append(State(q, v, t))

    return states


def rk4_integrate(spec: SystemSpec, cfg: SimConfig) -> List[ForceSample]:
    """Simulate a registered system and attach oracle forces to every stored state."""
    if cfg.initial_state.n != spec.n:
        raise ValueError(f"{spec.name} expects {spec.n} degrees of freedom")

    def accel(q, v, t):
        f, _, _ = true_force(spec, State(q, v, t))
        return f

    with np.errstate(over='ignore', invalid='ignore'):
        states = rk4_rollout(accel, cfg.initial_state, cfg.step_size, cfg.n_steps)
    logger.debug("Integrated %s for %d steps (eps=%g)", spec.name, cfg.n_steps, cfg.step_size)
    return [force_sample(spec, state) for state in states]


def default_sim_config(spec: SystemSpec, n_steps: Optional[int] = None,
                       step_size: Optional[float] = None) -> SimConfig:
    """The registry's trajectory setting for a system, optionally overridden."""
    definition = spec.definition
    if definition.initial_state is None:
        raise ValueError(f"{spec.name} has no default trajectory")
    q0, v0 = definition.initial_state
    return SimConfig(
        initial_state=State(q0, v0, 0.0),
        step_size=step_size if step_size is not None else definition.step_size,
        n_steps=n_steps if n_steps is not None else definition.n_steps,
    )
