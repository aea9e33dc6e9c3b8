"""
Tests for force templates and template fitting.
"""

import json

import numpy as np
import pytest
import torch

from src.dynamics import default_sim_config, get_system, rk4_integrate
from src.errors import ConfigError, FitFailedError
from src.networks.mlp import default_uan_spec
from src.networks.params import ParamVector
from src.symbolic import (
    FitData,
    FitResult,
    explain,
    fit_template,
    get_template,
    residual_report,
    save_residuals_csv,
)

FRICTION = np.array([[0.3, -0.1], [0.05, 0.2]])


def friction_data(n_points=60, seed=0):
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n_points, 2))
    qd = rng.standard_normal((n_points, 2))
    t = np.zeros(n_points)
    return FitData(q, qd, t, -(qd @ FRICTION.T))


class TestTemplates:
    """Test closed-form template evaluation."""

    def test_linear_friction(self):
        """Test the friction template is −A·q̇."""
        template = get_template('linear-friction')
        f = template.evaluate([1.0, 0.0, 0.0, 2.0], np.zeros((1, 2)), np.array([[1.0, -1.0]]), np.zeros(1))
        assert f.tolist() == [[-1.0, 2.0]]

    def test_neptune_pull_points_at_planet(self):
        """Test the pull at the origin points towards the planet's position."""
        template = get_template('neptune-pull', G=1.0)
        f = template.evaluate([0.1, 2.0, 0.5], np.zeros((1, 2)), np.zeros((1, 2)), np.array([0.0]))
        np.testing.assert_allclose(f, [[0.1 / 4.0, 0.0]])

    def test_power_law_drag(self):
        """Test the drag scales as |v|^(2s)·v."""
        template = get_template('power-law-drag')
        f = template.evaluate([0.5, 2.0], np.zeros((1, 2)), np.array([[2.0, 0.0]]), np.zeros(1))
        assert f.tolist() == [[-0.5 * 16.0 * 2.0, 0.0]]

    def test_unknown_template(self):
        """Test unknown names are configuration errors."""
        with pytest.raises(ConfigError):
            get_template('magnus-effect')

    def test_params_vector_needs_every_name(self):
        """Test converting a parameter dict checks for missing names."""
        with pytest.raises(ValueError):
            get_template('power-law-drag').params_vector({'A': 1.0})

    def test_invalid_log_bounds(self):
        """Test log-scale parameters need positive bounds."""
        from src.symbolic.templates import Template
        with pytest.raises(ValueError):
            Template('bad', ('x',), ((0.0, 1.0),), (True,), lambda p, q, qd, t: qd)


class TestFitting:
    """Test bounded Nelder–Mead fitting."""

    def test_recovers_friction_matrix(self):
        """Test exact targets give back the friction coefficients."""
        result = fit_template(get_template('linear-friction'), friction_data(), seed=0, restarts=4)
        fitted = np.array([result.params[name] for name in ('a11', 'a12', 'a21', 'a22')]).reshape(2, 2)
        np.testing.assert_allclose(fitted, FRICTION, atol=1e-4)
        assert result.rms_residual < 1e-4
        assert result.n_points == 60

    def test_zero_target_fails(self):
        """Test nothing beats the zero template on zero targets."""
        data = friction_data()
        data = FitData(data.q, data.qd, data.t, np.zeros_like(data.target))
        with pytest.raises(FitFailedError) as info:
            fit_template(get_template('linear-friction'), data, restarts=2)
        assert isinstance(info.value.best, FitResult)

    def test_thread_count_does_not_change_result(self):
        """Test restarts on a pool give the same fit as sequential restarts."""
        template = get_template('power-law-drag')
        rng = np.random.default_rng(1)
        qd = rng.uniform(-1.0, 1.0, (40, 2))
        target = template.evaluate([0.01, 1.5], np.zeros_like(qd), qd, np.zeros(40))
        data = FitData(np.zeros_like(qd), qd, np.zeros(40), target)
        single = fit_template(template, data, seed=3, restarts=4, threads=1)
        pooled = fit_template(template, data, seed=3, restarts=4, threads=2)
        assert single == pooled

    def test_too_few_points(self):
        """Test fewer than ten points per parameter is refused."""
        with pytest.raises(ValueError):
            fit_template(get_template('linear-friction'), friction_data(n_points=39))

    def test_residuals_and_json(self, temp_dir):
        """Test fit artifacts: JSON keys and one residual column per DOF."""
        template = get_template('linear-friction')
        data = friction_data()
        result = fit_template(template, data, restarts=2)
        path = result.save_json(temp_dir / "fit.json")
        with open(path, encoding='utf-8') as f:
            saved = json.load(f)
        assert set(saved) == {'template', 'params', 'rms_residual', 'n_points'}
        assert FitResult.from_dict(saved).params == result.params

        residuals = residual_report(template, result.params, data)
        assert residuals.shape == (60, 2)
        csv = save_residuals_csv(residuals, temp_dir / "residuals.csv")
        assert csv.read_text(encoding='utf-8').splitlines()[0] == "residual_1,residual_2"


class TestExplain:
    """Test fitting a template to a trained residual network."""

    def test_linear_network_is_explained_as_friction(self):
        """Test a UAN computing −A·q̇ is fitted back to A."""
        from tests.test_helpers import make_sample

        spec = default_uan_spec(2, time_input=False, hidden=())
        weight = np.zeros((2, 4))
        weight[:, 2:] = -FRICTION
        params = ParamVector(torch.tensor(np.concatenate([weight.ravel(), np.zeros(2)])), spec.layout())

        data = friction_data()
        samples = [make_sample(q, qd) for q, qd in zip(data.q, data.qd)]
        result, residuals = explain(params, spec, samples, get_template('linear-friction'), restarts=3)
        assert result.params['a12'] == pytest.approx(-0.1, abs=1e-4)
        assert np.max(np.abs(residuals)) < 1e-3


def uranus_samples(n_steps=300):
    spec = get_system('neptune')
    return spec, rk4_integrate(spec, default_sim_config(spec, n_steps=n_steps))


class TestIdentifiability:
    """Test templates against the systems they describe and against their own data."""

    def test_neptune_pull_reproduces_system_force(self):
        """Test the template at the true planet constants equals f_n along Uranus's orbit."""
        spec, samples = uranus_samples()
        p = spec.params
        data = FitData.from_samples(samples, np.array([s.f_n_true for s in samples]))
        template = get_template('neptune-pull', G=p['G'])
        f = template.evaluate([p['M_n'], p['r_n'], p['omega_n']], data.q, data.qd, data.t)
        np.testing.assert_allclose(f, data.target, rtol=0.0, atol=1e-9)

    @pytest.mark.parametrize("name,truth", [
        ('linear-friction', {'a11': 0.3, 'a12': -0.1, 'a21': 0.05, 'a22': 0.2}),
        ('power-law-drag', {'A': 0.01, 's': 1.5}),
        ('neptune-pull', {'M_n': 0.005, 'r_n': 3.0, 'omega_n': 3.0 ** -1.5}),
    ])
    def test_noise_free_fit_recovers_parameters(self, name, truth):
        """Test fitting a template to its own output returns its parameters to 1e-4 relative."""
        template = get_template(name)
        if name == 'neptune-pull':
            _, samples = uranus_samples()
            q = np.array([s.state.q for s in samples])
            qd = np.array([s.state.qdot for s in samples])
            t = np.array([s.state.t for s in samples])
        else:
            rng = np.random.default_rng(4)
            q = rng.standard_normal((80, 2))
            qd = rng.uniform(-1.0, 1.0, (80, 2))
            t = np.zeros(80)
        target = template.evaluate(template.params_vector(truth), q, qd, t)
        result = fit_template(template, FitData(q, qd, t, target), seed=0, restarts=20)
        for key, value in truth.items():
            assert result.params[key] == pytest.approx(value, rel=1e-4)
