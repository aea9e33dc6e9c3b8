#!/usr/bin/env python3
"""
Experiment Runner

Turns an ExperimentConfig into datasets, models and training runs and
writes the resulting CSV/JSON artifacts into the config's output
directory. Batch configs run their entries on a thread pool, each in its
own subdirectory.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.dynamics.dataset_io import load_samples_csv, save_samples_csv
from src.dynamics.integrator import default_sim_config, rk4_integrate, rk4_rollout
from src.dynamics.sampling import DataQualityConfig, build_quality_dataset, sample_gaussian_states
from src.dynamics.systems import ForceSample, State, SystemSpec, double_pendulum_energy
from src.errors import (
    ConfigError,
    FitFailedError,
    IntegrationDivergedError,
    NNPhDError,
    SingularMassMatrixError,
)
from src.experiments.config import BatchConfig, DataSource, ExperimentConfig, ExperimentKind
from src.experiments.reports import DecompositionReport, verdict_dict, write_csv, write_json
from src.networks.lagrangian import LagrangianModel
from src.networks.mlp import Init, default_uan_spec
from src.symbolic.explain import explain
from src.symbolic.fitting import save_residuals_csv
from src.symbolic.templates import get_template
from src.training.objective import Branches, ForceBatch, NNPhDModel, loss, misalignment
from src.training.snapshots import SnapshotStore
from src.training.sweep import detect_phase_transition, lambda_sweep
from src.training.trainer import TrainResult, train

logger = logging.getLogger(__name__)

EXTRAPOLATION_COLUMNS = ('t', 'theta1_true', 'theta1_nnphd', 'theta1_lnn', 'theta1_blackbox',
                         'E_true', 'E_nnphd', 'E_lnn', 'E_blackbox')
EXTRAPOLATION_MODELS = (('nnphd', Branches.BOTH), ('lnn', Branches.LNN_ONLY), ('blackbox', Branches.UAN_ONLY))
DEFAULT_TRAIN_UNTIL = 30.0

# (quadratic fraction, split coefficient, init); split-off variants start
# from a uniform init since a zero last layer gives a zero Hessian.
ABLATION_VARIANTS = {
    'softplus_split': (0.0, 1.0, Init.ZERO_LAST_LAYER),
    'mix_split': (0.5, 1.0, Init.ZERO_LAST_LAYER),
    'softplus_nosplit': (0.0, 0.0, Init.UNIFORM_FAN_IN),
    'mix_nosplit': (0.5, 0.0, Init.UNIFORM_FAN_IN),
}

SYMBOLIC_DEFAULTS = {
    'damped-double-pendulum': ('double-pendulum', 'linear-friction'),
    'neptune': ('kepler', 'neptune-pull'),
    'grav-radiation': ('kepler', 'power-law-drag'),
}


def build_model(config: ExperimentConfig, spec: SystemSpec, branches: Branches = Branches.BOTH,
                lagrangian: Optional[LagrangianModel] = None) -> NNPhDModel:
    """Both branches as described by ``config.model``."""
    settings = config.model
    try:
        if lagrangian is None:
            if settings.lagrangian_template is not None:
                lagrangian = LagrangianModel.from_template(settings.lagrangian_template)
            else:
                lagrangian = LagrangianModel.black_box(
                    spec.n,
                    hidden=settings.lnn_hidden,
                    quadratic_fraction=settings.quadratic_fraction,
                    split_a=settings.split_a,
                    init=Init(settings.lnn_init),
                )
        uan = default_uan_spec(spec.n, settings.time_input(spec), settings.uan_hidden)
        return NNPhDModel(lagrangian, uan, branches)
    except ValueError as e:
        raise ConfigError(f"Invalid model settings: {e}")


def trajectory_samples(config: ExperimentConfig, spec: SystemSpec, n_steps: Optional[int] = None) -> List[ForceSample]:
    data = config.data
    try:
        sim = default_sim_config(spec, n_steps if n_steps is not None else data.n_steps, data.step_size)
        if data.initial_state is not None:
            if len(data.initial_state) != 2 * spec.n:
                raise ConfigError(f"data.initial_state needs {2 * spec.n} values (q then qdot)")
            q0 = np.array(data.initial_state[:spec.n], dtype=np.float64)
            v0 = np.array(data.initial_state[spec.n:], dtype=np.float64)
            sim = replace(sim, initial_state=State(q0, v0, 0.0))
    except ValueError as e:
        raise ConfigError(str(e), system=spec.name)
    return rk4_integrate(spec, sim)


def csv_samples(path: str, spec: SystemSpec) -> List[ForceSample]:
    """Load a saved dataset and check it matches the system's degrees of freedom."""
    try:
        samples = load_samples_csv(path)
    except (OSError, ValueError) as e:
        raise ConfigError(f"Cannot load dataset: {e}", path=str(path))
    if samples[0].state.n != spec.n:
        raise ConfigError(f"Dataset has {samples[0].state.n} coordinates, {spec.name} needs {spec.n}",
                          path=str(path))
    return samples


def build_datasets(config: ExperimentConfig, spec: SystemSpec) -> Tuple[List[ForceSample], List[ForceSample]]:
    """
    Training and held-out samples.

    Trajectory data is split at ``data.train_until`` (everything later is
    held out); Gaussian data draws a separate test set when ``n_test`` > 0.
    CSV data comes from ``data.path`` and ``data.test_path``.
    """
    data = config.data
    if data.source is DataSource.CSV:
        train_set = csv_samples(data.path, spec)
        return train_set, csv_samples(data.test_path, spec) if data.test_path else []

    if data.source is DataSource.TRAJECTORY:
        samples = trajectory_samples(config, spec)
        if data.train_until is None:
            return samples, []
        train_set = [s for s in samples if s.state.t <= data.train_until]
        return train_set, [s for s in samples if s.state.t > data.train_until]

    if data.coverage_alpha < 1.0 or data.imbalance_beta is not None:
        beta = data.imbalance_beta if data.imbalance_beta is not None else 0.5
        return _quality_datasets(config, spec, data.coverage_alpha, beta)

    train_set = sample_gaussian_states(spec, data.n_train, config.seed)
    test_set = sample_gaussian_states(spec, data.n_test, config.seed + 3) if data.n_test else []
    return train_set, test_set


def _quality_datasets(config: ExperimentConfig, spec: SystemSpec, alpha: float, beta: float):
    try:
        quality = DataQualityConfig(alpha, beta, config.data.n_train, config.data.n_test)
        return build_quality_dataset(spec, quality, config.seed)
    except ValueError as e:
        raise ConfigError(str(e), system=spec.name)


def _output_dir(config: ExperimentConfig) -> Path:
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Output directory is not writable: {e}", output_dir=str(out))
    write_json(out / 'config.json', config.to_dict())
    return out


def run_sweep(config: ExperimentConfig, threads: int = 1) -> Path:
    """sweep.csv, verdict.json, dataset.csv and per-λ parameter snapshots."""
    spec = config.system.build()
    out = _output_dir(config)
    train_set, test_set = build_datasets(config, spec)
    save_samples_csv(train_set, out / 'dataset.csv')

    model = build_model(config, spec)
    store = SnapshotStore(out / 'snapshots')
    store.clear()
    sweep = lambda_sweep(train_set, config.lambdas, config.train, model, test_samples=test_set or None, store=store)
    sweep.to_csv(out / 'sweep.csv')

    verdict = detect_phase_transition(sweep, config.tau, source=config.jump_source)
    write_json(out / 'verdict.json', verdict_dict(spec.name, verdict, config.tau))
    logger.info("%s: jump=%.6g -> %s", spec.name, verdict.jump,
                "non-conservative" if verdict.is_nonconservative else "conservative")
    return out


def decomposition_rows(model: NNPhDModel, result: TrainResult, samples: Sequence[ForceSample]) -> Tuple[List[str], np.ndarray]:
    """Per-sample learned split, with the true split appended when every sample has it."""
    batch = ForceBatch.from_samples(samples)
    f_c, f_n = model.forces(result.params_c.detached(), result.params_n.detached(), batch)
    n = batch.n
    columns = (['t'] + [f"q_{i}" for i in range(1, n + 1)] + [f"qdot_{i}" for i in range(1, n + 1)]
               + [f"f_{i}" for i in range(1, n + 1)] + [f"fc_nn_{i}" for i in range(1, n + 1)]
               + [f"fn_nn_{i}" for i in range(1, n + 1)])
    blocks = [batch.t.numpy()[:, None], batch.q.numpy(), batch.qd.numpy(), batch.f.numpy(),
              f_c.detach().numpy(), f_n.detach().numpy()]
    if batch.f_c_true is not None:
        columns += [f"fc_{i}" for i in range(1, n + 1)] + [f"fn_{i}" for i in range(1, n + 1)]
        blocks += [batch.f_c_true.numpy(), batch.f_n_true.numpy()]
    return columns, np.hstack(blocks)


def _fit_and_save(config: ExperimentConfig, spec: SystemSpec, model: NNPhDModel, result: TrainResult,
                  samples: Sequence[ForceSample], template_name: str, out: Path, threads: int):
    constants = {'G': spec.params['G']} if template_name == 'neptune-pull' else {}
    template = get_template(template_name, **constants)
    try:
        fit, residuals = explain(result.params_n, model.uan, samples, template, seed=config.seed,
                                 threads=threads, restarts=config.symbolic.restarts)
    except FitFailedError as e:
        best = e.best
        if best is not None:
            best.save_json(out / 'fit.json')
        raise
    except ValueError as e:
        raise ConfigError(str(e), template=template_name)
    fit.save_json(out / 'fit.json')
    save_residuals_csv(residuals, out / 'residuals.csv')
    return fit


def run_decompose(config: ExperimentConfig, threads: int = 1) -> Path:
    """Single-λ training: trace.csv, decomposition.csv and report.json."""
    spec = config.system.build()
    out = _output_dir(config)
    train_set, test_set = build_datasets(config, spec)
    model = build_model(config, spec)

    result = train(train_set, config.train, model)
    result.save_trace_csv(out / 'trace.csv')
    columns, rows = decomposition_rows(model, result, train_set)
    write_csv(out / 'decomposition.csv', columns, rows)

    test_loss = loss(result.params_c, result.params_n, test_set, config.train, model) if test_set else None
    alignment = None
    if all(s.has_truth for s in train_set):
        alignment = misalignment(result.params_c, result.params_n, test_set or train_set, model)
    fit = None
    if config.symbolic.template is not None:
        fit = _fit_and_save(config, spec, model, result, train_set, config.symbolic.template, out, threads)

    report = DecompositionReport(spec.name, result.final, alignment, test_loss, fit, result.singular_steps)
    report.save_json(out / 'report.json')
    return out


def _guarded_rollout(accel, initial: State, step_size: float, n_steps: int) -> Tuple[List[State], Optional[dict]]:
    states: List[State] = []
    try:
        with np.errstate(over='ignore', invalid='ignore'):
            rk4_rollout(accel, initial, step_size, n_steps, out=states)
    except (IntegrationDivergedError, SingularMassMatrixError) as e:
        logger.warning("Rollout stopped early: %s", e)
        return states, {'error': type(e).__name__, 'message': e.message, 'step': e.context.get('step'),
                        't': initial.t + len(states) * step_size}
    return states, None


def _column(states: List[State], values, length: int) -> np.ndarray:
    """Pad a truncated rollout column with NaN."""
    column = np.full(length, np.nan)
    if states:
        column[:len(states)] = values
    return column


def run_extrapolate(config: ExperimentConfig, threads: int = 1) -> Path:
    """
    Train on the early part of a damped double-pendulum trajectory and roll
    out NNPhD, LNN-only and black-box (UAN-only) models from the initial
    state. Rollouts that diverge are NaN from the failing step on and are
    listed in rollouts.json.
    """
    spec = config.system.build()
    if spec.name != 'damped-double-pendulum':
        raise ConfigError("Extrapolation needs the damped-double-pendulum system", system=spec.name)
    out = _output_dir(config)

    truth = trajectory_samples(config, spec, n_steps=config.rollout_steps)
    train_until = config.data.train_until if config.data.train_until is not None else DEFAULT_TRAIN_UNTIL
    train_set = [s for s in truth if s.state.t <= train_until]
    step_size = config.data.step_size or spec.definition.step_size
    length = len(truth)

    q_true = np.stack([s.state.q for s in truth])
    qd_true = np.stack([s.state.qdot for s in truth])
    columns = {
        't': np.array([s.state.t for s in truth]),
        'theta1_true': q_true[:, 0],
        'E_true': double_pendulum_energy(spec.params, q_true, qd_true),
    }
    status = {}
    for name, branches in EXTRAPOLATION_MODELS:
        model = build_model(config, spec, branches)
        result = train(train_set, config.train, model)
        result.save_trace_csv(out / f"trace_{name}.csv")
        states, failure = _guarded_rollout(model.acceleration(result.params_c, result.params_n),
                                           truth[0].state, step_size, config.rollout_steps)
        q = np.stack([s.q for s in states]) if states else np.zeros((0, spec.n))
        qd = np.stack([s.qdot for s in states]) if states else np.zeros((0, spec.n))
        columns[f"theta1_{name}"] = _column(states, q[:, 0], length)
        columns[f"E_{name}"] = _column(states, double_pendulum_energy(spec.params, q, qd), length)
        status[name] = {'diverged': failure is not None, 'steps_completed': max(len(states) - 1, 0),
                        'failure': failure}
        logger.info("Rolled out %s for %d steps%s", name, max(len(states) - 1, 0),
                    " (diverged)" if failure else "")

    write_csv(out / 'extrapolation.csv', EXTRAPOLATION_COLUMNS,
              np.column_stack([columns[c] for c in EXTRAPOLATION_COLUMNS]))
    write_json(out / 'rollouts.json', {'train_until': train_until, 'step_size': step_size, 'models': status})
    return out


DATA_QUALITY_COLUMNS = ('Le', 'Lb', 'm_c', 'm_n')


def _quality_row(config: ExperimentConfig, spec: SystemSpec, model: NNPhDModel, alpha: float, beta: float):
    """Train at ``train.lam``; training-set losses, misalignment on the held-out set when there is one."""
    train_set, test_set = _quality_datasets(config, spec, alpha, beta)
    result = train(train_set, config.train, model)
    alignment = misalignment(result.params_c, result.params_n, test_set or train_set, model)
    return [result.final.L_e, result.final.L_b, alignment.m_c, alignment.m_n]


def run_data_quality(config: ExperimentConfig, threads: int = 1) -> Path:
    """
    coverage.csv: one run per wedge fraction α (balanced β = 0.5).
    imbalance.csv: one run per upper-half-plane fraction β (α from
    ``data.coverage_alpha``).
    """
    if not config.alphas and not config.betas:
        raise ConfigError("data-quality needs 'alphas' and/or 'betas'")
    spec = config.system.build()
    out = _output_dir(config)
    model = build_model(config, spec)

    if config.alphas:
        rows = [[alpha] + _quality_row(config, spec, model, alpha, 0.5) for alpha in config.alphas]
        write_csv(out / 'coverage.csv', ('alpha',) + DATA_QUALITY_COLUMNS, rows)
    if config.betas:
        beta_alpha = config.data.coverage_alpha
        rows = [[beta] + _quality_row(config, spec, model, beta_alpha, beta) for beta in config.betas]
        write_csv(out / 'imbalance.csv', ('beta',) + DATA_QUALITY_COLUMNS, rows)
    return out


def run_symbolic(config: ExperimentConfig, threads: int = 1) -> Path:
    """Template Lagrangian + UAN on trajectory data, then a template fit of the UAN."""
    spec = config.system.build()
    lagrangian_name, template_name = SYMBOLIC_DEFAULTS.get(spec.name, (None, None))
    lagrangian_name = config.model.lagrangian_template or lagrangian_name
    template_name = config.symbolic.template or template_name
    if lagrangian_name is None or template_name is None:
        raise ConfigError("No default templates for this system; set model.lagrangian_template and "
                          "symbolic.template", system=spec.name)
    out = _output_dir(config)

    train_set, _ = build_datasets(config, spec)
    try:
        lagrangian = LagrangianModel.from_template(lagrangian_name)
    except ValueError as e:
        raise ConfigError(str(e))
    model = build_model(config, spec, lagrangian=lagrangian)
    result = train(train_set, config.train, model)
    result.save_trace_csv(out / 'trace.csv')

    fit = _fit_and_save(config, spec, model, result, train_set, template_name, out, threads)
    alignment = misalignment(result.params_c, result.params_n, train_set, model)
    DecompositionReport(spec.name, result.final, alignment, None, fit, result.singular_steps).save_json(
        out / 'report.json')
    return out


def run_tricks_ablation(config: ExperimentConfig, threads: int = 1) -> Path:
    """
    Four LNN-only runs on identical data, seeds and schedules:
    {softplus, softplus/x² mix} × {split on, split off}. Singular steps are
    skipped and counted.
    """
    spec = config.system.build()
    if spec.name != 'HO':
        raise ConfigError("The tricks ablation runs on the HO system", system=spec.name)
    out = _output_dir(config)
    train_set, _ = build_datasets(config, spec)
    cfg = replace(config.train, skip_singular=True)

    summary = {}
    for name, (fraction, split_a, init) in ABLATION_VARIANTS.items():
        lagrangian = LagrangianModel.black_box(spec.n, config.model.lnn_hidden, fraction, split_a, init)
        model = build_model(config, spec, Branches.LNN_ONLY, lagrangian=lagrangian)
        result = train(train_set, cfg, model)
        result.save_trace_csv(out / f"trace_{name}.csv")
        summary[name] = {
            'quadratic_fraction': fraction,
            'split_a': split_a,
            'final_Le': result.final.L_e if result.final is not None else None,
            'singular_steps': result.singular_steps,
        }
        logger.info("%s: final L_e=%s, %d singular steps", name, summary[name]['final_Le'], result.singular_steps)

    finished = {k: v['final_Le'] for k, v in summary.items() if v['final_Le'] is not None}
    best = min(finished, key=finished.get) if finished else None
    write_json(out / 'summary.json', {'variants': summary, 'best': best})
    return out


EXPERIMENTS: Dict[ExperimentKind, Callable[[ExperimentConfig, int], Path]] = {
    ExperimentKind.SWEEP: run_sweep,
    ExperimentKind.DECOMPOSE: run_decompose,
    ExperimentKind.EXTRAPOLATE: run_extrapolate,
    ExperimentKind.DATA_QUALITY: run_data_quality,
    ExperimentKind.SYMBOLIC: run_symbolic,
    ExperimentKind.TRICKS_ABLATION: run_tricks_ablation,
}


def run_experiment(config: ExperimentConfig, threads: int = 1) -> Path:
    """
    Run one experiment and return its output directory.

    Raises:
        ConfigError: invalid settings for this experiment kind
        NNPhDError: numerical failure during data generation, training or fitting
    """
    logger.info("Running %s on %s -> %s", config.experiment.value, config.system.name, config.output_dir)
    return EXPERIMENTS[config.experiment](config, threads)


def run_batch(batch: BatchConfig, threads: int = 1) -> List[Path]:
    """
    Run every entry in ``<output_dir>/<entry name>``; entries run
    concurrently when ``threads`` > 1. All entries finish before the first
    failure (in entry order) is raised.
    """
    configs = [replace(config, output_dir=str(Path(batch.output_dir) / name)) for name, config in batch.entries]

    def run_one(config: ExperimentConfig):
        try:
            return run_experiment(config, threads=1), None
        except NNPhDError as e:
            return None, e

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_one, configs))
    else:
        outcomes = [run_one(config) for config in configs]

    for (name, _), (_, error) in zip(batch.entries, outcomes):
        if error is not None:
            raise error.annotate(entry=name)
    return [path for path, _ in outcomes]
