"""
Pytest configuration and shared fixtures.
"""

import json
import sys
from pathlib import Path

import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from tests.test_helpers import tiny_model, tiny_train_config


@pytest.fixture
def temp_dir(tmp_path):
    """Create a temporary directory for testing."""
    return tmp_path


@pytest.fixture
def ho_ld():
    """Linearly damped oscillator with default constants."""
    from src.dynamics import get_system
    return get_system('HO+LD')


@pytest.fixture
def ho_ld_samples(ho_ld):
    """64 seeded Gaussian samples of HO+LD."""
    from src.dynamics import sample_gaussian_states
    return sample_gaussian_states(ho_ld, 64, seed=0)


@pytest.fixture
def small_model():
    """NNPhD model on one degree of freedom with 8-wide hidden layers."""
    return tiny_model(n=1)


@pytest.fixture
def short_config():
    """Twenty-step schedule."""
    return tiny_train_config()


@pytest.fixture
def presets_dir(tmp_path, monkeypatch):
    """Empty preset directory selected through NNPHD_PRESETS."""
    directory = tmp_path / "presets"
    directory.mkdir()
    monkeypatch.setenv("NNPHD_PRESETS", str(directory))
    return directory


@pytest.fixture
def write_config(tmp_path):
    """Write a dict as a JSON config file and return its path."""
    def _write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding='utf-8')
        return path
    return _write
