"""Experiment configs, presets and the runner behind the command line."""

from .config import (
    BatchConfig,
    DataSettings,
    DataSource,
    ExperimentConfig,
    ExperimentKind,
    ModelSettings,
    SymbolicSettings,
    SystemSettings,
    load_config,
    parse_config,
    parse_experiment,
    read_config_file,
)
from .presets import PRESETS_ENV, PresetManager, default_presets_dir
from .reports import DecompositionReport, verdict_dict, write_csv, write_json
from .runner import (
    EXPERIMENTS,
    build_datasets,
    build_model,
    run_batch,
    run_experiment,
)

__all__ = [
    'BatchConfig',
    'DataSettings',
    'DataSource',
    'ExperimentConfig',
    'ExperimentKind',
    'ModelSettings',
    'SymbolicSettings',
    'SystemSettings',
    'load_config',
    'parse_config',
    'parse_experiment',
    'read_config_file',
    'PRESETS_ENV',
    'PresetManager',
    'default_presets_dir',
    'DecompositionReport',
    'verdict_dict',
    'write_csv',
    'write_json',
    'EXPERIMENTS',
    'build_datasets',
    'build_model',
    'run_batch',
    'run_experiment',
]
