#!/usr/bin/env python3
"""
Error Types

Exception hierarchy shared by every NNPhD module. Each error carries a
context dictionary so callers further up (trainer, sweep, CLI) can attach
the step index or λ value at which a failure happened.
"""

from typing import Any, Dict, Optional


class NNPhDError(Exception):
    """Base class for all library errors."""

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = dict(context)

    def annotate(self, **context: Any) -> 'NNPhDError':
        """Attach extra context (keeps existing keys) and return self."""
        for key, value in context.items():
            self.context.setdefault(key, value)
        return self

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{k}={v!r}" for k, v in sorted(self.context.items()))
        return f"{self.message} ({details})"


class ConfigError(NNPhDError):
    """Invalid or incomplete experiment configuration."""


class DomainError(NNPhDError):
    """A primitive was evaluated outside its domain."""

    def __init__(self, message: str, node_index: int, **context: Any):
        super().__init__(message, node_index=node_index, **context)
        self.node_index = node_index


class SingularMassMatrixError(NNPhDError):
    """The velocity Hessian of a Lagrangian could not be inverted."""

    def __init__(self, message: str, state: Any = None, condition: Optional[float] = None, **context: Any):
        super().__init__(message, **context)
        self.state = state
        self.condition = condition

    @property
    def step(self) -> Optional[int]:
        return self.context.get('step')


class SingularityError(NNPhDError):
    """A ground-truth force field was evaluated at a singular point."""


class IntegrationDivergedError(NNPhDError):
    """An RK4 rollout produced a non-finite state."""

    def __init__(self, message: str, step: int, **context: Any):
        super().__init__(message, step=step, **context)
        self.step = step


class EmptyDatasetError(NNPhDError):
    """A filter or sampler cannot produce any samples."""


class NonFiniteGradientError(NNPhDError):
    """An optimizer received NaN or infinite gradient entries."""


class NonFiniteLossError(NNPhDError):
    """The training objective became NaN or infinite."""


class InsufficientGridError(NNPhDError):
    """A λ sweep does not cover both sides of the transition."""


class MissingGroundTruthError(NNPhDError):
    """Samples lack the ground-truth conservative/non-conservative split."""


class FitFailedError(NNPhDError):
    """No symbolic-fit restart beat the zero template."""

    def __init__(self, message: str, best: Any = None, **context: Any):
        super().__init__(message, **context)
        self.best = best
