#!/usr/bin/env python3
"""
Experiment Reports

JSON and CSV artifacts written by the experiment runner. Every CSV is
UTF-8, comma separated, with a header row and 17 significant digits.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from src.symbolic.fitting import FitResult
from src.training.objective import LossReport, MisalignmentReport
from src.training.sweep import PhaseVerdict


def write_csv(path: Union[str, Path], columns: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(rows, dtype=np.float64).reshape(-1, len(columns))
    np.savetxt(path, data, fmt='%.17g', delimiter=',', header=','.join(columns), comments='', newline='\n',
               encoding='utf-8')
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    return value


def write_json(path: Union[str, Path], data: Dict[str, Any]) -> Path:
    """Pretty-printed JSON; non-finite floats become null."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(_jsonable(data), f, indent=2, sort_keys=False)
        f.write('\n')
    return path


def verdict_dict(system: str, verdict: PhaseVerdict, tau: float) -> Dict[str, Any]:
    return {
        'system': system,
        'jump': verdict.jump,
        'is_nonconservative': verdict.is_nonconservative,
        'tau': tau,
    }


@dataclass(frozen=True)
class DecompositionReport:
    """Outcome of one single-λ training run."""
    system: str
    loss: LossReport
    misalignment: Optional[MisalignmentReport] = None
    test_loss: Optional[LossReport] = None
    fit: Optional[FitResult] = None
    singular_steps: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            'system': self.system,
            'lambda': self.loss.lam,
            'train': {'Le': self.loss.L_e, 'Lb': self.loss.L_b, 'total': self.loss.total},
            'singular_steps': self.singular_steps,
        }
        if self.test_loss is not None:
            data['test'] = {'Le': self.test_loss.L_e, 'Lb': self.test_loss.L_b, 'total': self.test_loss.total}
        if self.misalignment is not None:
            data['misalignment'] = {'m_c': self.misalignment.m_c, 'm_n': self.misalignment.m_n}
        if self.fit is not None:
            data['fit'] = self.fit.to_dict()
        return data

    def save_json(self, path: Union[str, Path]) -> Path:
        return write_json(path, self.to_dict())
