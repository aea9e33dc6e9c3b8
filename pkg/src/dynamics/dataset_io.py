#!/usr/bin/env python3
"""
Dataset CSV files

One row per sample: ``t, q_1..q_n, qdot_1..qdot_n, f_1..f_n`` followed by
``fc_1..fc_n, fn_1..fn_n`` when every sample carries the true split.
"""

import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from src.dynamics.systems import ForceSample, State
from src.errors import EmptyDatasetError

logger = logging.getLogger(__name__)

CSV_FORMAT = '%.17g'


def dataset_header(n: int, with_truth: bool) -> List[str]:
    columns = ['t']
    groups = ['q', 'qdot', 'f'] + (['fc', 'fn'] if with_truth else [])
    for group in groups:
        columns.extend(f"{group}_{i + 1}" for i in range(n))
    return columns


def samples_to_array(samples: Sequence[ForceSample]) -> np.ndarray:
    with_truth = all(s.has_truth for s in samples)
    rows = []
    for s in samples:
        parts = [[s.state.t], s.state.q, s.state.qdot, s.f]
        if with_truth:
            parts.extend([s.f_c_true, s.f_n_true])
        rows.append(np.concatenate(parts))
    return np.asarray(rows, dtype=np.float64)


def save_samples_csv(samples: Sequence[ForceSample], path: Union[str, Path]) -> Path:
    """Write samples with a header row and 17 significant digits."""
    if not samples:
        raise EmptyDatasetError("Refusing to write an empty dataset", path=str(path))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = samples[0].state.n
    with_truth = all(s.has_truth for s in samples)
    np.savetxt(path, samples_to_array(samples), fmt=CSV_FORMAT, delimiter=',',
               header=','.join(dataset_header(n, with_truth)), comments='', newline='\n',
               encoding='utf-8')
    logger.debug("Wrote %d samples to %s", len(samples), path)
    return path


def load_samples_csv(path: Union[str, Path]) -> List[ForceSample]:
    """Read a dataset written by ``save_samples_csv``."""
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        header = f.readline().strip().split(',')
    n = sum(1 for c in header if c.startswith('q_'))
    with_truth = len(header) == 1 + 5 * n
    if header != dataset_header(n, with_truth):
        raise ValueError(f"Unrecognized dataset header in {path}")

    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2, encoding='utf-8')
    if data.shape[0] == 0:
        raise EmptyDatasetError("Dataset file has no rows", path=str(path))

    samples = []
    for row in data:
        q, qd, f = row[1:1 + n], row[1 + n:1 + 2 * n], row[1 + 2 * n:1 + 3 * n]
        f_c = row[1 + 3 * n:1 + 4 * n] if with_truth else None
        f_n = row[1 + 4 * n:1 + 5 * n] if with_truth else None
        samples.append(ForceSample(State(q, qd, row[0]), f, f_c, f_n))
    return samples
