"""
Tests for the system registry, RK4 integration and dataset generation.
"""

import numpy as np
import pytest

from src.dynamics import (
    DataQualityConfig,
    State,
    SimConfig,
    apply_coverage_wedge,
    apply_imbalance,
    build_quality_dataset,
    default_sim_config,
    double_pendulum_energy,
    get_system,
    list_systems,
    load_samples_csv,
    neptune_position,
    polar_angle,
    rk4_integrate,
    rk4_rollout,
    sample_gaussian_states,
    save_samples_csv,
    true_force,
)
from src.errors import ConfigError, EmptyDatasetError, IntegrationDivergedError, SingularityError


class TestSystems:
    """Test ground-truth force laws."""

    def test_registry_names(self):
        """Test all benchmark systems are registered."""
        assert set(list_systems()) >= {
            'HO', 'HO+MF', 'HO+CG', 'HO+LD', 'HO+CD', 'HO+PF',
            'damped-double-pendulum', 'neptune', 'grav-radiation',
        }

    def test_unknown_system(self):
        """Test an unknown name is a configuration error."""
        with pytest.raises(ConfigError):
            get_system('pendulum-on-a-cart')

    def test_unknown_override(self):
        """Test overriding a constant the system lacks is rejected."""
        with pytest.raises(ConfigError):
            get_system('HO', {'gamma': 1.0})

    def test_override_applies(self):
        """Test an override replaces the default constant."""
        spec = get_system('HO+LD', {'gamma': 2.0})
        f, f_c, f_n = true_force(spec, State([1.0], [1.0]))
        assert f_n.tolist() == [-2.0]
        assert f_c.tolist() == [-1.0]

    @pytest.mark.parametrize("name,q,qd,t,f_c,f_n", [
        ('HO', [0.5], [2.0], 0.0, [-0.5], [0.0]),
        ('HO+CG', [0.5], [2.0], 0.0, [-1.5], [0.0]),
        ('HO+LD', [0.5], [2.0], 0.0, [-0.5], [-1.0]),
        ('HO+CD', [0.5], [-2.0], 0.0, [-0.5], [0.5]),
        ('HO+PF', [0.5], [2.0], np.pi / 2, [-0.5], [0.5]),
    ])
    def test_oscillator_split(self, name, q, qd, t, f_c, f_n):
        """Test each oscillator's conservative and dissipative parts."""
        f, got_c, got_n = true_force(get_system(name), State(q, qd, t))
        np.testing.assert_allclose(got_c, f_c, atol=1e-12)
        np.testing.assert_allclose(got_n, f_n, atol=1e-12)
        np.testing.assert_allclose(f, np.add(f_c, f_n), atol=1e-12)

    def test_magnetic_force_is_conservative_part(self):
        """Test the magnetic term is counted in f_c and is perpendicular to q̇."""
        spec = get_system('HO+MF')
        qd = np.array([0.3, -0.7])
        f, f_c, f_n = true_force(spec, State([0.0, 0.0], qd))
        assert np.dot(f_c, qd) == pytest.approx(0.0)
        assert np.all(f_n == 0.0)

    def test_neptune_singularity(self):
        """Test evaluating at Neptune's position raises."""
        spec = get_system('neptune')
        position = neptune_position(spec.params, 0.0)
        with pytest.raises(SingularityError):
            true_force(spec, State(position, [0.0, 0.0], 0.0))

    def test_neptune_pull_matches_two_body_sum(self):
        """Test Uranus's forces against a direct sum over the Sun and a point-mass Neptune at 100 states."""
        spec = get_system('neptune')
        p = spec.params
        rng = np.random.default_rng(8)
        radius = rng.uniform(0.5, 2.0, 100)
        angle = rng.uniform(0.0, 2.0 * np.pi, 100)
        q = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)
        qd = rng.normal(size=(100, 2))
        t = rng.uniform(0.0, 200.0, 100)
        for i in range(100):
            planet = p['r_n'] * np.array([np.cos(p['omega_n'] * t[i]), np.sin(p['omega_n'] * t[i])])
            to_sun, to_planet = -q[i], planet - q[i]
            sun = p['G'] * p['M_sun'] * to_sun / np.linalg.norm(to_sun) ** 3
            pull = p['G'] * p['M_n'] * to_planet / np.linalg.norm(to_planet) ** 3
            f, f_c, f_n = true_force(spec, State(q[i], qd[i], t[i]))
            np.testing.assert_allclose(f_c, sun, rtol=1e-12)
            np.testing.assert_allclose(f_n, pull, rtol=1e-12)
            np.testing.assert_allclose(f, sun + pull, rtol=1e-12)

    def test_radiation_drag_opposes_velocity(self):
        """Test the radiation reaction is antiparallel to the velocity."""
        spec = get_system('grav-radiation')
        qd = np.array([1.0, 0.5])
        _, _, f_n = true_force(spec, State([0.0, 2.0], qd))
        assert np.dot(f_n, qd) < 0
        assert abs(f_n[0] * qd[1] - f_n[1] * qd[0]) < 1e-15

    def test_wrong_dimension(self):
        """Test a state of the wrong size is rejected."""
        with pytest.raises(ValueError):
            true_force(get_system('HO'), State([0.0, 1.0], [0.0, 0.0]))


class TestIntegrator:
    """Test the RK4 rollout."""

    def test_oscillator_matches_cosine(self):
        """Test q(t) = cos t for a unit oscillator started at rest."""
        states = rk4_rollout(lambda q, v, t: -q, State([1.0], [0.0]), 0.1, 100)
        assert len(states) == 101
        assert states[-1].t == pytest.approx(10.0)
        assert states[-1].q[0] == pytest.approx(np.cos(10.0), abs=1e-4)

    def test_oscillator_at_unit_time(self):
        """Test 100 steps of ε = 0.01 land within 1e-8 of cos(1)."""
        states = rk4_rollout(lambda q, v, t: -q, State([1.0], [0.0]), 0.01, 100)
        assert states[-1].t == pytest.approx(1.0)
        assert abs(states[-1].q[0] - np.cos(1.0)) <= 1e-8

    def test_oscillator_energy_drift(self):
        """Test ½q̇² + ½q² drifts by at most 1e-6 over 1000 steps of ε = 0.01."""
        states = rk4_rollout(lambda q, v, t: -q, State([1.0], [0.0]), 0.01, 1000)
        energy = np.array([0.5 * s.qdot[0] ** 2 + 0.5 * s.q[0] ** 2 for s in states])
        assert np.max(np.abs(energy - energy[0])) <= 1e-6

    def test_divergence_reports_step(self):
        """Test a non-finite acceleration stops the rollout at that step."""
        partial = []
        with pytest.raises(IntegrationDivergedError) as info:
            rk4_rollout(lambda q, v, t: np.full_like(q, np.nan), State([1.0], [0.0]), 0.1, 10, out=partial)
        assert info.value.step == 1
        assert len(partial) == 1

    def test_errors_inside_accel_are_annotated(self):
        """Test library errors raised by the force law carry the step index."""
        spec = get_system('neptune')
        position = neptune_position(spec.params, 0.0)

        def accel(q, v, t):
            return true_force(spec, State(q, v, t))[0]

        with pytest.raises(SingularityError) as info:
            rk4_rollout(accel, State(position, [0.0, 0.0]), 0.1, 5)
        assert info.value.context['step'] == 1

    def test_sim_config_validation(self):
        """Test non-positive step sizes and empty rollouts are rejected."""
        with pytest.raises(ValueError):
            SimConfig(State([0.0], [0.0]), step_size=0.0, n_steps=5)
        with pytest.raises(ValueError):
            SimConfig(State([0.0], [0.0]), step_size=0.1, n_steps=0)

    def test_default_trajectory(self):
        """Test the double pendulum's default trajectory setting."""
        cfg = default_sim_config(get_system('damped-double-pendulum'))
        assert cfg.step_size == 0.1
        assert cfg.initial_state.q.tolist() == [1.0, 0.0]
        with pytest.raises(ValueError):
            default_sim_config(get_system('HO'))

    def test_undamped_pendulum_conserves_energy(self):
        """Test RK4 keeps the frictionless double pendulum's energy."""
        spec = get_system('damped-double-pendulum', {'gamma': 0.0})
        samples = rk4_integrate(spec, default_sim_config(spec, n_steps=500, step_size=0.01))
        q = np.array([s.state.q for s in samples])
        qd = np.array([s.state.qdot for s in samples])
        energy = double_pendulum_energy(spec.params, q, qd)
        assert np.max(np.abs(energy - energy[0])) < 1e-6

    def test_damping_dissipates_energy(self):
        """Test friction lowers the energy along the default trajectory."""
        spec = get_system('damped-double-pendulum')
        samples = rk4_integrate(spec, default_sim_config(spec, n_steps=100))
        first, last = samples[0].state, samples[-1].state
        assert (double_pendulum_energy(spec.params, last.q, last.qdot)
                < double_pendulum_energy(spec.params, first.q, first.qdot))
        assert all(s.has_truth for s in samples)


class TestSampling:
    """Test Gaussian sampling and data-quality filters."""

    def test_gaussian_is_seeded(self, ho_ld):
        """Test identical seeds give identical samples."""
        a = sample_gaussian_states(ho_ld, 10, seed=3)
        b = sample_gaussian_states(ho_ld, 10, seed=3)
        assert [s.state.q[0] for s in a] == [s.state.q[0] for s in b]
        assert all(s.has_truth for s in a)

    def test_coverage_wedge_quarter(self, ho_ld):
        """Test α = 0.25 keeps only the first quadrant and preserves the count."""
        samples = sample_gaussian_states(ho_ld, 200, seed=0)
        kept = apply_coverage_wedge(samples, 0.25, ho_ld, seed=1)
        assert len(kept) == 200
        q = np.array([s.state.q[0] for s in kept])
        qd = np.array([s.state.qdot[0] for s in kept])
        assert np.all(q > 0)
        assert np.all(qd >= 0)
        assert np.all(polar_angle(q, qd) < np.pi / 2)

    def test_coverage_zero_is_empty(self, ho_ld):
        """Test α = 0 cannot produce data."""
        with pytest.raises(EmptyDatasetError):
            apply_coverage_wedge(sample_gaussian_states(ho_ld, 10, 0), 0.0, ho_ld)

    def test_filters_need_one_dof(self):
        """Test the filters reject multi-DOF systems."""
        spec = get_system('HO+MF')
        with pytest.raises(ValueError):
            apply_imbalance(sample_gaussian_states(spec, 10, 0), 0.5, 10, spec)

    @pytest.mark.parametrize("beta", [0.0, 0.1, 0.5, 0.9, 1.0])
    def test_imbalance_counts(self, ho_ld, beta):
        """Test exactly round(β·N) samples have q̇ > 0."""
        samples = sample_gaussian_states(ho_ld, 100, seed=0)
        balanced = apply_imbalance(samples, beta, 100, ho_ld, seed=1)
        upper = sum(1 for s in balanced if s.state.qdot[0] > 0)
        assert len(balanced) == 100
        assert upper == round(beta * 100)

    def test_quality_dataset(self, ho_ld):
        """Test the training set is filtered and the test set is not."""
        cfg = DataQualityConfig(coverage_alpha=0.5, imbalance_beta=0.5, n_train=50, n_test=30)
        train, test = build_quality_dataset(ho_ld, cfg, seed=0)
        assert len(train) == 50 and len(test) == 30
        assert all(s.state.qdot[0] >= 0 for s in train)
        assert any(s.state.qdot[0] < 0 for s in test)

    def test_quality_config_validation(self):
        """Test fractions outside [0, 1] are rejected."""
        with pytest.raises(ValueError):
            DataQualityConfig(coverage_alpha=1.5)


class TestDatasetFiles:
    """Test dataset CSV files."""

    def test_saved_dataset_loads_back(self, ho_ld_samples, temp_dir):
        """Test a dataset with the true split survives a save and load."""
        path = save_samples_csv(ho_ld_samples, temp_dir / "data.csv")
        header = path.read_text(encoding='utf-8').splitlines()[0]
        assert header == "t,q_1,qdot_1,f_1,fc_1,fn_1"
        loaded = load_samples_csv(path)
        assert len(loaded) == len(ho_ld_samples)
        assert loaded[5].f_n_true[0] == ho_ld_samples[5].f_n_true[0]
        assert loaded[5].state.t == ho_ld_samples[5].state.t

    def test_empty_dataset_not_written(self, temp_dir):
        """Test saving nothing raises."""
        with pytest.raises(EmptyDatasetError):
            save_samples_csv([], temp_dir / "empty.csv")

    def test_bad_header(self, temp_dir):
        """Test foreign CSV files are rejected."""
        path = temp_dir / "other.csv"
        path.write_text("a,b\n1,2\n", encoding='utf-8')
        with pytest.raises(ValueError):
            load_samples_csv(path)
