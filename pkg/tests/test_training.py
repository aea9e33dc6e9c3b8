"""
Tests for the objective, ADAM, the training loop and λ sweeps.
"""

import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.dynamics.systems import ForceSample, State
from src.errors import (
    ConfigError,
    InsufficientGridError,
    MissingGroundTruthError,
    NonFiniteGradientError,
    SingularMassMatrixError,
)
from src.networks.params import ParamVector
from src.training import (
    AdamState,
    Branches,
    ForceBatch,
    LossReport,
    SnapshotStore,
    SweepEntry,
    SweepResult,
    TrainConfig,
    adam_step,
    decomposition_objective,
    detect_phase_transition,
    lambda_sweep,
    loss,
    loss_terms,
    misalignment,
    misalignment_from_forces,
    sample_norm,
    theorem1_inequality_check,
    train,
)
from src.training.trainer import minibatches
from tests.test_helpers import make_sample, tiny_model, tiny_train_config


def synthetic_sweep(errors, lambdas=(0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)):
    return SweepResult([
        SweepEntry(lam, LossReport.from_terms(err, 0.0, lam)) for lam, err in zip(lambdas, errors)
    ])


class TestTrainConfig:
    """Test optimizer settings validation."""

    def test_defaults(self):
        """Test the default schedule runs 2000 steps in four stages."""
        cfg = TrainConfig()
        assert cfg.total_steps == 2000
        assert [lr for lr, _ in cfg.lr_schedule] == [1e-2, 1e-3, 1e-4, 1e-5]

    @pytest.mark.parametrize("kwargs", [
        {'lam': 0.0},
        {'p': 4},
        {'batch_size': 0},
        {'lr_schedule': ()},
        {'lr_schedule': ((1e-3, 0),)},
    ])
    def test_invalid(self, kwargs):
        """Test invalid settings raise a configuration error."""
        with pytest.raises(ConfigError):
            TrainConfig(**kwargs)

    def test_dict_round_trip_and_unknown_keys(self):
        """Test settings survive to_dict/from_dict and unknown keys are rejected."""
        cfg = TrainConfig(lam=0.5, p=2, mse=True, lr_schedule=((1e-3, 5),))
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ConfigError):
            TrainConfig.from_dict({'learning_rate': 0.1})


class TestObjective:
    """Test loss terms and misalignment."""

    def setup_method(self):
        self.f = torch.tensor([[1.0], [-1.0]], dtype=torch.float64)
        self.f_pred = torch.tensor([[0.0], [1.0]], dtype=torch.float64)
        self.f_n = torch.tensor([[0.5], [0.0]], dtype=torch.float64)

    def test_p1_is_mean_absolute(self):
        """Test p = 1 averages absolute errors."""
        L_e, L_b = loss_terms(self.f_pred, self.f_n, self.f, TrainConfig(p=1))
        assert float(L_e) == pytest.approx(1.5)
        assert float(L_b) == pytest.approx(0.25)

    def test_p2_takes_root(self):
        """Test p = 2 is a root mean square."""
        L_e, _ = loss_terms(self.f_pred, self.f_n, self.f, TrainConfig(p=2))
        assert float(L_e) == pytest.approx(math.sqrt(2.5))

    def test_mse_squares_both_terms(self):
        """Test the MSE variant drops the root from both terms."""
        L_e, L_b = loss_terms(self.f_pred, self.f_n, self.f, TrainConfig(p=2, mse=True))
        assert float(L_e) == pytest.approx(2.5)
        assert float(L_b) == pytest.approx(0.125)

    def test_untrained_model_loss(self, small_model, ho_ld_samples):
        """Test a freshly initialized model predicts zero force."""
        params_c, params_n = small_model.init(seed=0)
        report = loss(params_c, params_n, ho_ld_samples, TrainConfig(lam=2.0), small_model)
        expected = np.mean(np.abs([s.f[0] for s in ho_ld_samples]))
        assert report.L_e == pytest.approx(expected)
        assert report.L_b == 0.0
        assert report.total == pytest.approx(report.L_e)

    def test_blackbox_has_no_penalty(self, ho_ld_samples):
        """Test a UAN-only model reports λ = 0."""
        model = tiny_model(branches=Branches.UAN_ONLY)
        params_c, params_n = model.init(0)
        assert loss(params_c, params_n, ho_ld_samples, TrainConfig(lam=5.0), model).lam == 0.0

    def test_misalignment_against_truth(self, small_model, ho_ld_samples):
        """Test zero predictions are misaligned by the RMS of each true part."""
        params_c, params_n = small_model.init(seed=0)
        report = misalignment(params_c, params_n, ho_ld_samples, small_model)
        f_c = np.array([s.f_c_true for s in ho_ld_samples])
        f_n = np.array([s.f_n_true for s in ho_ld_samples])
        assert report.m_c == pytest.approx(np.sqrt(np.mean(f_c ** 2)))
        assert report.m_n == pytest.approx(np.sqrt(np.mean(f_n ** 2)))

    def test_misalignment_needs_truth(self, small_model):
        """Test samples without the true split are rejected."""
        params_c, params_n = small_model.init(seed=0)
        samples = [ForceSample(State([1.0], [0.0]), [-1.0])]
        with pytest.raises(MissingGroundTruthError):
            misalignment(params_c, params_n, samples, small_model)

    def test_misalignment_from_forces(self):
        """Test the RMS deviation of each component."""
        report = misalignment_from_forces([[1.0], [1.0]], [[0.0], [2.0]], [[0.0], [0.0]], [[0.0], [0.0]])
        assert report.m_c == pytest.approx(1.0)
        assert report.m_n == pytest.approx(math.sqrt(2.0))

    def test_batch_subset(self, ho_ld_samples):
        """Test subsets keep the true split aligned with states."""
        batch = ForceBatch.from_samples(ho_ld_samples)
        sub = batch.subset([3, 7])
        assert len(sub) == 2
        assert float(sub.f_n_true[1, 0]) == ho_ld_samples[7].f_n_true[0]


class TestAdam:
    """Test the functional ADAM update."""

    def test_first_step_moves_by_lr_times_sign(self):
        """Test bias correction makes the first step ≈ lr·sign(g)."""
        params = torch.tensor([1.0, -2.0, 0.5], dtype=torch.float64)
        grads = torch.tensor([3.0, -0.01, 100.0], dtype=torch.float64)
        new, state = adam_step(params, grads, AdamState.zeros_like(params), lr=0.01)
        np.testing.assert_allclose((params - new).numpy(), 0.01 * np.sign(grads.numpy()), rtol=1e-5)
        assert state.step == 1

    def test_zero_gradient(self):
        """Test a zero gradient keeps fresh parameters in place and decays existing moments."""
        params = torch.tensor([0.5, -1.5], dtype=torch.float64)
        zero = torch.zeros(2, dtype=torch.float64)
        new, _ = adam_step(params, zero, AdamState.zeros_like(params), lr=0.1)
        assert torch.equal(new, params)

        state = AdamState(torch.ones(2, dtype=torch.float64), torch.ones(2, dtype=torch.float64), 3)
        _, state = adam_step(params, zero, state, lr=0.1)
        np.testing.assert_allclose(state.m.numpy(), [0.9, 0.9])
        np.testing.assert_allclose(state.v.numpy(), [0.999, 0.999])
        assert state.step == 4

    def test_constant_gradient_steps_by_lr(self):
        """Test a constant gradient moves every parameter by lr per step, against its sign."""
        params = torch.tensor([0.0, 0.0], dtype=torch.float64)
        grads = torch.tensor([0.3, -7.0], dtype=torch.float64)
        state = AdamState.zeros_like(params)
        for _ in range(1000):
            new, state = adam_step(params, grads, state, lr=0.01)
            np.testing.assert_allclose((params - new).numpy(), [0.01, -0.01], rtol=1e-6)
            params = new

    def test_quadratic_bowl(self):
        """Test f(w) = w² at lr 0.01: |w| falls monotonically while positive and ends near 0."""
        w = torch.tensor([1.0], dtype=torch.float64)
        state = AdamState.zeros_like(w)
        path = [1.0]
        for _ in range(500):
            w, state = adam_step(w, 2.0 * w, state, lr=0.01)
            path.append(float(w[0]))
        assert all(b < a for a, b in zip(path[:50], path[1:51]))
        assert max(abs(x) for x in path[-100:]) < 0.1

    def test_inputs_unchanged(self):
        """Test the update returns new tensors."""
        params = torch.zeros(2, dtype=torch.float64)
        state = AdamState.zeros_like(params)
        adam_step(params, torch.ones(2, dtype=torch.float64), state, lr=0.1)
        assert torch.all(params == 0.0)
        assert state.step == 0

    def test_non_finite_gradient(self):
        """Test NaN gradients are refused."""
        params = torch.zeros(3, dtype=torch.float64)
        grads = torch.tensor([0.0, float('nan'), 1.0], dtype=torch.float64)
        with pytest.raises(NonFiniteGradientError) as info:
            adam_step(params, grads, AdamState.zeros_like(params), lr=0.1)
        assert info.value.context['first_index'] == 1


class TestTrainer:
    """Test the training loop."""

    def test_minibatches_cover_each_epoch(self):
        """Test each epoch is a permutation split into batches."""
        stream = minibatches(10, 4, seed=0)
        epoch = np.concatenate([next(stream) for _ in range(3)])
        assert sorted(epoch.tolist()) == list(range(10))

    def test_trace_has_one_row_per_step(self, small_model, ho_ld_samples, short_config, temp_dir):
        """Test a 20-step schedule yields 20 finite trace rows and a final report."""
        result = train(ho_ld_samples, short_config, small_model)
        assert len(result.trace) == 20
        assert [row.lr for row in result.trace][:10] == [1e-2] * 10
        assert all(math.isfinite(row.total) for row in result.trace)
        assert result.final is not None and result.final.lam == short_config.lam
        path = result.save_trace_csv(temp_dir / "trace.csv")
        assert path.read_text(encoding='utf-8').splitlines()[0] == "step,lr,Le,Lb,total"

    def test_training_is_deterministic(self, small_model, ho_ld_samples, short_config):
        """Test equal seeds give bitwise equal parameters."""
        a = train(ho_ld_samples, short_config, small_model)
        b = train(ho_ld_samples, short_config, small_model)
        assert torch.equal(a.params_c.values, b.params_c.values)
        assert torch.equal(a.params_n.values, b.params_n.values)

    def test_warm_start_is_used(self, small_model, ho_ld_samples, short_config):
        """Test given parameters replace the fresh initialization."""
        params_c, params_n = small_model.init(seed=9)
        result = train(ho_ld_samples, tiny_train_config(lr_schedule=((1e-12, 1),)), small_model, params_c, params_n)
        torch.testing.assert_close(result.params_c.values, params_c.values, atol=1e-9, rtol=0.0)

    def test_singular_steps_raise_with_step(self, ho_ld_samples, short_config):
        """Test a degenerate Lagrangian fails at the first step."""
        model = tiny_model(split_a=0.0)
        with pytest.raises(SingularMassMatrixError) as info:
            train(ho_ld_samples, short_config, model)
        assert info.value.step == 1

    def test_singular_steps_can_be_skipped(self, ho_ld_samples):
        """Test skipped steps are counted and traced as NaN."""
        model = tiny_model(split_a=0.0)
        result = train(ho_ld_samples, tiny_train_config(skip_singular=True), model)
        assert result.singular_steps == 20
        assert all(math.isnan(row.L_e) for row in result.trace)
        assert result.final is None

    def test_lnn_only_learns_oscillator(self):
        """Test the Lagrangian branch alone lowers the error on a conservative system."""
        from src.dynamics import get_system, sample_gaussian_states
        samples = sample_gaussian_states(get_system('HO'), 64, seed=1)
        model = tiny_model(branches=Branches.LNN_ONLY)
        result = train(samples, tiny_train_config(lr_schedule=((1e-2, 60),), skip_singular=True), model)
        errors = [row.L_e for row in result.trace if math.isfinite(row.L_e)]
        first = np.mean(errors[:5])
        last = np.mean(errors[-5:])
        assert last < first


class TestSweep:
    """Test λ sweeps and transition detection."""

    def test_sweep_entries_follow_grid(self, small_model, ho_ld_samples, short_config, temp_dir):
        """Test one entry and two snapshots per λ."""
        store = SnapshotStore(temp_dir / "snapshots")
        result = lambda_sweep(ho_ld_samples[:32], [0.1, 2.0], short_config, small_model,
                              test_samples=ho_ld_samples[32:], store=store)
        assert result.lambdas == [0.1, 2.0]
        assert all(e.test is not None for e in result.entries)
        assert len(store.list_snapshots()) == 4
        assert result.entries[1].train.lam == 2.0

    def test_sweep_is_deterministic(self, small_model, ho_ld_samples, short_config):
        """Test two warm-started sweeps with the same seed give identical entries."""
        runs = [
            lambda_sweep(ho_ld_samples[:32], [0.2, 5.0], short_config, small_model, test_samples=ho_ld_samples[32:])
            for _ in range(2)
        ]
        assert runs[0].entries == runs[1].entries

    @pytest.mark.parametrize("scale", [0.01, 3.7, 1000.0])
    def test_jump_scales_with_errors_and_tau(self, scale):
        """Test rescaling every error and τ together rescales the jump and keeps the verdict."""
        errors = np.array([0.013, 0.017, 0.02, 0.1, 0.31, 0.4, 0.45])
        for tau, flagged in [(0.1, True), (0.5, False)]:
            base = detect_phase_transition(synthetic_sweep(errors), tau=tau)
            scaled = detect_phase_transition(synthetic_sweep(errors * scale), tau=tau * scale)
            assert base.is_nonconservative is flagged
            assert scaled.is_nonconservative == base.is_nonconservative
            assert scaled.jump == pytest.approx(base.jump * scale, rel=1e-12)

    @pytest.mark.parametrize("grid", [[], [0.5, 0.1], [1.0, 1.0]])
    def test_bad_grid(self, small_model, ho_ld_samples, short_config, grid):
        """Test empty or non-increasing grids are rejected."""
        with pytest.raises(ConfigError):
            lambda_sweep(ho_ld_samples, grid, short_config, small_model)

    def test_failure_is_annotated_with_lambda(self, ho_ld_samples, short_config):
        """Test training errors carry the λ that failed."""
        with pytest.raises(SingularMassMatrixError) as info:
            lambda_sweep(ho_ld_samples, [0.2, 5.0], short_config, tiny_model(split_a=0.0))
        assert info.value.context['lam'] == 0.2

    def test_jump_detects_nonconservative(self):
        """Test a rising recovery error across λ = 1 is flagged."""
        verdict = detect_phase_transition(synthetic_sweep([0.01, 0.01, 0.02, 0.2, 0.4, 0.5, 0.5]))
        assert verdict.is_nonconservative
        assert verdict.jump == pytest.approx(0.5 - 0.01)

    def test_flat_errors_are_conservative(self):
        """Test a flat error curve is not flagged."""
        verdict = detect_phase_transition(synthetic_sweep([0.02] * 7))
        assert not verdict.is_nonconservative
        assert verdict.jump == pytest.approx(0.0)

    def test_tau_threshold(self):
        """Test the verdict compares the jump against τ."""
        sweep = synthetic_sweep([0.0, 0.0, 0.0, 0.0, 0.05, 0.05, 0.05])
        assert not detect_phase_transition(sweep, tau=0.1).is_nonconservative
        assert detect_phase_transition(sweep, tau=0.01).is_nonconservative

    def test_one_sided_grid(self):
        """Test a grid entirely below λ = 1 is insufficient."""
        with pytest.raises(InsufficientGridError):
            detect_phase_transition(synthetic_sweep([0.1, 0.1, 0.1], lambdas=(0.1, 0.2, 0.5)))

    def test_missing_window(self):
        """Test a grid straddling 1 but missing [2, 10] is insufficient."""
        with pytest.raises(InsufficientGridError):
            detect_phase_transition(synthetic_sweep([0.1, 0.1, 0.1], lambdas=(0.2, 0.5, 50.0)))

    def test_test_source_needs_holdout(self):
        """Test asking for held-out errors without a holdout fails."""
        with pytest.raises(ConfigError):
            detect_phase_transition(synthetic_sweep([0.1] * 7), source='test')

    def test_csv_preserves_verdict(self, temp_dir):
        """Test a sweep read back from CSV gives the same jump."""
        sweep = synthetic_sweep([0.013, 0.017, 0.02, 0.1, 0.31, 0.4, 0.45])
        reloaded = SweepResult.from_csv(sweep.to_csv(temp_dir / "sweep.csv"))
        assert reloaded.lambdas == sweep.lambdas
        assert detect_phase_transition(reloaded).jump == detect_phase_transition(sweep).jump
        assert reloaded.entries[0].test is None


class TestSnapshots:
    """Test the snapshot store."""

    def test_save_load_clear(self, temp_dir):
        """Test snapshots keep their layout and can be cleared."""
        store = SnapshotStore(temp_dir)
        params = ParamVector(torch.arange(6, dtype=torch.float64), (('w', (2, 3)),))
        snapshot = store.save(0.5, 'lnn', params)
        assert store.list_snapshots(0.5) == [snapshot]
        loaded = store.load(snapshot)
        assert loaded.layout == params.layout
        assert torch.equal(loaded.values, params.values)
        store.clear()
        assert store.list_snapshots() == []
        with pytest.raises(KeyError):
            store.load(snapshot)


finite_vectors = arrays(np.float64, 12, elements=st.floats(min_value=-5.0, max_value=5.0))


class TestInequalities:
    """Test the sample-set bounds on both sides of λ = 1."""

    @settings(max_examples=50, deadline=None)
    @given(f=finite_vectors, f_c=finite_vectors, f_n=finite_vectors,
           lam=st.floats(min_value=1.01, max_value=50.0), p=st.sampled_from([1, 2, 3]))
    def test_bound_above_one(self, f, f_c, f_n, lam, p):
        """Test the objective never drops below ‖d‖ + (λ−1)‖f_n‖ for λ > 1."""
        assert theorem1_inequality_check(f, f_c, f_n, lam, p)

    @settings(max_examples=50, deadline=None)
    @given(f=finite_vectors, f_c=finite_vectors, f_n=finite_vectors,
           lam=st.floats(min_value=0.01, max_value=0.99), p=st.sampled_from([1, 2, 3]))
    def test_bound_below_one(self, f, f_c, f_n, lam, p):
        """Test interpolating the residual attains λ‖d‖ for λ < 1."""
        assert theorem1_inequality_check(f, f_c, f_n, lam, p)

    def test_thousand_random_instances(self):
        """Test both bounds on 1000 seeded random sample sets, λ and p."""
        rng = np.random.default_rng(1000)
        for _ in range(1000):
            size = int(rng.integers(1, 40))
            f, f_c, f_n = (rng.normal(scale=rng.uniform(0.1, 5.0), size=size) for _ in range(3))
            lam = float(rng.uniform(1.01, 100.0) if rng.random() < 0.5 else rng.uniform(0.01, 0.99))
            p = int(rng.integers(1, 4))
            assert theorem1_inequality_check(f, f_c, f_n, lam, p)

    def test_interpolating_residual_attains_bound(self):
        """Test f_n = f − f_c gives λ‖f − f_c‖ below one and f_n = 0 gives ‖f − f_c‖ above one."""
        f = np.array([1.0, -2.0, 0.5])
        f_c = np.array([0.5, 0.0, 0.5])
        d = f - f_c
        assert decomposition_objective(f, f_c, d, 0.5, 1) == pytest.approx(0.5 * sample_norm(d, 1), rel=1e-12)
        assert decomposition_objective(f, f_c, np.zeros(3), 2.0, 1) == pytest.approx(sample_norm(d, 1), rel=1e-12)

    def test_lambda_one_undefined(self):
        """Test λ = 1 is outside both bounds."""
        with pytest.raises(ValueError):
            theorem1_inequality_check(np.ones(2), np.zeros(2), np.zeros(2), 1.0, 1)

    def test_sample_norm(self):
        """Test the p-mean norm."""
        assert sample_norm([3.0, -4.0], 2) == pytest.approx(math.sqrt(12.5))
        assert decomposition_objective([1.0], [0.0], [1.0], 0.5, 1) == pytest.approx(0.5)
