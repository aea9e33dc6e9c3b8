#!/usr/bin/env python3
"""
Train-and-Explain

Evaluates a trained UAN on the states it was trained on and fits a force
template to its output.
"""

from typing import Sequence, Tuple

import numpy as np
import torch

from src.dynamics.systems import ForceSample
from src.networks.mlp import MlpSpec, uan_forward_batch
from src.networks.params import ParamVector
from src.symbolic.fitting import DEFAULT_RESTARTS, FitData, FitResult, fit_template, residual_report
from src.symbolic.templates import Template


def uan_outputs(params_n: ParamVector, spec: MlpSpec, samples: Sequence[ForceSample]) -> np.ndarray:
    q = torch.from_numpy(np.stack([s.state.q for s in samples]))
    qd = torch.from_numpy(np.stack([s.state.qdot for s in samples]))
    t = torch.tensor([s.state.t for s in samples], dtype=torch.float64)
    with torch.no_grad():
        return uan_forward_batch(params_n, spec, q, qd, t).numpy()


def explain(params_n: ParamVector, spec: MlpSpec, samples: Sequence[ForceSample], template: Template,
            seed: int = 0, threads: int = 1, restarts: int = DEFAULT_RESTARTS) -> Tuple[FitResult, np.ndarray]:
    """Fit ``template`` to the UAN output; returns the fit and its residuals."""
    data = FitData.from_samples(samples, uan_outputs(params_n, spec, samples))
    result = fit_template(template, data, seed=seed, restarts=restarts, threads=threads)
    return result, residual_report(template, result.params, data)
