#!/usr/bin/env python3
"""
Experiment Configuration

Typed experiment configs read from JSON or YAML files. Every section has
defaults; anything unknown or malformed raises ConfigError.
"""

import json
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

try:
    import yaml
    YAML_AVAILABLE = True
except ImportError:
    YAML_AVAILABLE = False

from src.dynamics.systems import SystemSpec, get_system
from src.errors import ConfigError
from src.training.objective import TrainConfig
from src.training.sweep import DEFAULT_LAMBDAS, DEFAULT_TAU


class ExperimentKind(Enum):
    SWEEP = "sweep"
    DECOMPOSE = "decompose"
    EXTRAPOLATE = "extrapolate"
    DATA_QUALITY = "data-quality"
    SYMBOLIC = "symbolic"
    TRICKS_ABLATION = "tricks-ablation"


class DataSource(Enum):
    GAUSSIAN = "gaussian"
    TRAJECTORY = "trajectory"
    CSV = "csv"


@dataclass(frozen=True)
class SystemSettings:
    name: str
    overrides: Dict[str, float] = field(default_factory=dict)

    def build(self) -> SystemSpec:
        return get_system(self.name, self.overrides)


@dataclass(frozen=True)
class DataSettings:
    """
    Where training states come from.

    Gaussian sampling uses ``n_train``/``n_test``. Trajectory data uses the
    system's default initial condition, step size and length unless given;
    ``train_until`` keeps only states with t ≤ that time for training.
    CSV data reads a file written by ``save_samples_csv`` from ``path``, with
    an optional held-out file at ``test_path``.
    """
    source: DataSource = DataSource.GAUSSIAN
    n_train: int = 1000
    n_test: int = 0
    initial_state: Optional[Tuple[float, ...]] = None
    step_size: Optional[float] = None
    n_steps: Optional[int] = None
    train_until: Optional[float] = None
    coverage_alpha: float = 1.0
    imbalance_beta: Optional[float] = None
    path: Optional[str] = None
    test_path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'source', DataSource(self.source))
        if self.source is DataSource.CSV and not self.path:
            raise ConfigError("data.path is required when data.source is 'csv'")
        if self.initial_state is not None:
            object.__setattr__(self, 'initial_state', tuple(float(v) for v in self.initial_state))
        if self.n_train < 1 or self.n_test < 0:
            raise ConfigError("data.n_train must be positive and data.n_test non-negative")
        if not 0.0 <= self.coverage_alpha <= 1.0:
            raise ConfigError(f"data.coverage_alpha must lie in [0, 1], got {self.coverage_alpha}")
        if self.imbalance_beta is not None and not 0.0 <= self.imbalance_beta <= 1.0:
            raise ConfigError(f"data.imbalance_beta must lie in [0, 1], got {self.imbalance_beta}")


@dataclass(frozen=True)
class ModelSettings:
    """
    Branch architectures.

    ``lagrangian_template`` switches the conservative branch to a feature
    template; ``uan_time_input`` is ``auto`` (time only for time-dependent
    systems), ``true`` or ``false``.
    """
    lnn_hidden: Tuple[int, ...] = (200, 200)
    quadratic_fraction: float = 0.5
    split_a: float = 1.0
    lnn_init: str = "zero-last-layer"
    lagrangian_template: Optional[str] = None
    uan_hidden: Tuple[int, ...] = (200, 200)
    uan_time_input: Union[str, bool] = "auto"

    def __post_init__(self):
        object.__setattr__(self, 'lnn_hidden', tuple(int(w) for w in self.lnn_hidden))
        object.__setattr__(self, 'uan_hidden', tuple(int(w) for w in self.uan_hidden))
        if self.uan_time_input not in ("auto", True, False):
            raise ConfigError(f"model.uan_time_input must be 'auto', true or false, got {self.uan_time_input!r}")

    def time_input(self, spec: SystemSpec) -> bool:
        if self.uan_time_input == "auto":
            return spec.time_dependent
        return bool(self.uan_time_input)


@dataclass(frozen=True)
class SymbolicSettings:
    template: Optional[str] = None
    restarts: int = 20


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment.

    Args:
        experiment: What to run
        system: System name and constant overrides
        data: Data generation settings
        model: Branch architectures
        train: Optimizer settings (``train.lam`` is the single-run λ)
        lambdas: λ grid for sweeps
        tau: Jump threshold of the phase-transition verdict
        jump_source: 'train' or 'test' recovery errors for the verdict
        alphas: Coverage fractions for data-quality runs
        betas: Imbalance fractions for data-quality runs
        rollout_steps: Extrapolation horizon in RK4 steps
        symbolic: Template fit settings
        output_dir: Artifact directory
        seed: Seed for data and initialization
    """
    experiment: ExperimentKind
    system: SystemSettings
    data: DataSettings = field(default_factory=DataSettings)
    model: ModelSettings = field(default_factory=ModelSettings)
    train: TrainConfig = field(default_factory=TrainConfig)
    lambdas: Tuple[float, ...] = DEFAULT_LAMBDAS
    tau: float = DEFAULT_TAU
    jump_source: str = 'train'
    alphas: Tuple[float, ...] = ()
    betas: Tuple[float, ...] = ()
    rollout_steps: int = 2000
    symbolic: SymbolicSettings = field(default_factory=SymbolicSettings)
    output_dir: str = 'results'
    seed: int = 0

    def with_overrides(self, output_dir: Optional[str] = None, seed: Optional[int] = None) -> 'ExperimentConfig':
        config = self
        if output_dir is not None:
            config = replace(config, output_dir=str(output_dir))
        if seed is not None:
            config = replace(config, seed=int(seed), train=replace(config.train, seed=int(seed)))
        return config

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['experiment'] = self.experiment.value
        data['data']['source'] = self.data.source.value
        data['train'] = self.train.to_dict()
        return data


@dataclass(frozen=True)
class BatchConfig:
    """Independent experiments run with isolated output subdirectories."""
    entries: Tuple[Tuple[str, ExperimentConfig], ...]
    output_dir: str = 'results'

    def with_overrides(self, output_dir: Optional[str] = None, seed: Optional[int] = None) -> 'BatchConfig':
        entries = tuple((name, config.with_overrides(seed=seed)) for name, config in self.entries)
        return BatchConfig(entries, str(output_dir) if output_dir is not None else self.output_dir)


def _section(cls, data: Optional[Dict[str, Any]], where: str):
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"The {where} section must be a mapping, got {type(data).__name__}")
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid {where} section: {e}")


def _float_tuple(values: Any, where: str) -> Tuple[float, ...]:
    if isinstance(values, (str, bytes)) or not hasattr(values, '__iter__'):
        raise ConfigError(f"{where} must be a list of numbers, got {values!r}")
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where} must be a list of numbers: {e}")


def parse_experiment(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a plain dictionary.

    Raises:
        ConfigError: missing system, unknown experiment kind or system,
            unknown keys, invalid or wrongly typed values
    """
    if not isinstance(data, dict):
        raise ConfigError("Experiment config must be a mapping")
    data = dict(data)
    try:
        kind = ExperimentKind(data.pop('experiment', 'sweep'))
    except ValueError as e:
        raise ConfigError(str(e), known=[k.value for k in ExperimentKind])

    system = data.pop('system', None)
    if system is None:
        raise ConfigError("Config is missing the 'system' section")
    if isinstance(system, str):
        system = {'name': system}
    system_settings = _section(SystemSettings, system, 'system')
    system_settings.build()

    top_level = {f.name for f in fields(ExperimentConfig)} - {'experiment', 'system'}
    unknown = set(data) - top_level
    if unknown:
        raise ConfigError(f"Unknown config keys: {sorted(unknown)}")

    lambdas = _float_tuple(data.pop('lambdas', DEFAULT_LAMBDAS), 'lambdas')
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])) or not lambdas:
        raise ConfigError("lambdas must be a non-empty, strictly increasing list")
    jump_source = data.pop('jump_source', 'train')
    if jump_source not in ('train', 'test'):
        raise ConfigError(f"jump_source must be 'train' or 'test', got {jump_source!r}")

    train_data = data.pop('train', None) or {}
    if not isinstance(train_data, dict):
        raise ConfigError(f"The train section must be a mapping, got {type(train_data).__name__}")
    try:
        seed = int(data.pop('seed', 0))
        train_data = dict(train_data)
        train_data.setdefault('seed', seed)
        return ExperimentConfig(
            experiment=kind,
            system=system_settings,
            data=_section(DataSettings, data.pop('data', None), 'data'),
            model=_section(ModelSettings, data.pop('model', None), 'model'),
            train=TrainConfig.from_dict(train_data),
            lambdas=lambdas,
            tau=float(data.pop('tau', DEFAULT_TAU)),
            jump_source=jump_source,
            alphas=_float_tuple(data.pop('alphas', ()), 'alphas'),
            betas=_float_tuple(data.pop('betas', ()), 'betas'),
            rollout_steps=int(data.pop('rollout_steps', 2000)),
            symbolic=_section(SymbolicSettings, data.pop('symbolic', None), 'symbolic'),
            output_dir=str(data.pop('output_dir', 'results')),
            seed=seed,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid config: {e}")


def parse_config(data: Dict[str, Any]) -> Union[ExperimentConfig, BatchConfig]:
    """A batch config has a ``batch`` list of named experiment entries."""
    if isinstance(data, dict) and 'batch' in data:
        unknown = set(data) - {'batch', 'output_dir'}
        if unknown:
            raise ConfigError(f"Unknown batch config keys: {sorted(unknown)}")
        entries = data['batch']
        if not isinstance(entries, list) or not entries:
            raise ConfigError("'batch' must be a non-empty list")
        named = []
        for index, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise ConfigError(f"Batch entry {index} must be a mapping")
            entry = dict(entry)
            name = str(entry.pop('name', f"entry_{index:02d}"))
            try:
                named.append((name, parse_experiment(entry)))
            except ConfigError as e:
                raise e.annotate(entry=name)
        names = [name for name, _ in named]
        if len(set(names)) != len(names):
            raise ConfigError("Batch entry names must be unique", names=names)
        return BatchConfig(tuple(named), str(data.get('output_dir', 'results')))
    return parse_experiment(data)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON or YAML (``.yaml``/``.yml``) file into a dictionary.

    Raises:
        ConfigError: unreadable file, parse error, or YAML without PyYAML
    """
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            if path.suffix.lower() in ('.yaml', '.yml'):
                if not YAML_AVAILABLE:
                    raise ConfigError("PyYAML is required for YAML configs", path=str(path))
                return yaml.safe_load(f)
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read config: {e}", path=str(path))
    except (json.JSONDecodeError, ValueError) as e:
        raise ConfigError(f"Cannot parse config: {e}", path=str(path))
    except Exception as e:
        if YAML_AVAILABLE and isinstance(e, yaml.YAMLError):
            raise ConfigError(f"Cannot parse config: {e}", path=str(path))
        raise


def load_config(path: Union[str, Path]) -> Union[ExperimentConfig, BatchConfig]:
    return parse_config(read_config_file(path))
