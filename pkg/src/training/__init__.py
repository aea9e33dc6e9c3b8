"""Objective, optimizer, training loop, λ sweeps and transition detection."""

from .objective import (
    DEFAULT_LR_SCHEDULE,
    Branches,
    ForceBatch,
    LossReport,
    MisalignmentReport,
    NNPhDModel,
    TrainConfig,
    loss,
    loss_terms,
    misalignment,
    misalignment_from_forces,
)
from .optimizer import AdamState, adam_step
from .trainer import TraceRow, TrainResult, train
from .snapshots import SnapshotStore
from .sweep import (
    DEFAULT_LAMBDAS,
    DEFAULT_TAU,
    PhaseVerdict,
    SweepEntry,
    SweepResult,
    detect_phase_transition,
    lambda_sweep,
)
from .theory import decomposition_objective, sample_norm, theorem1_inequality_check

__all__ = [
    'DEFAULT_LR_SCHEDULE',
    'Branches',
    'ForceBatch',
    'LossReport',
    'MisalignmentReport',
    'NNPhDModel',
    'TrainConfig',
    'loss',
    'loss_terms',
    'misalignment',
    'misalignment_from_forces',
    'AdamState',
    'adam_step',
    'TraceRow',
    'TrainResult',
    'train',
    'SnapshotStore',
    'DEFAULT_LAMBDAS',
    'DEFAULT_TAU',
    'PhaseVerdict',
    'SweepEntry',
    'SweepResult',
    'detect_phase_transition',
    'lambda_sweep',
    'decomposition_objective',
    'sample_norm',
    'theorem1_inequality_check',
]
