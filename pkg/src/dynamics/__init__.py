"""Ground-truth systems, RK4 simulation and dataset generation."""

from .systems import (
    SYSTEMS,
    ForceSample,
    State,
    SystemDefinition,
    SystemSpec,
    double_pendulum_energy,
    double_pendulum_lagrangian,
    force_sample,
    get_system,
    list_systems,
    neptune_position,
    radiation_drag_coefficient,
    true_force,
    true_forces,
)
from .integrator import SimConfig, default_sim_config, rk4_integrate, rk4_rollout
from .sampling import (
    DataQualityConfig,
    apply_coverage_wedge,
    apply_imbalance,
    build_quality_dataset,
    polar_angle,
    sample_gaussian_states,
)
from .dataset_io import load_samples_csv, save_samples_csv

__all__ = [
    'SYSTEMS',
    'ForceSample',
    'State',
    'SystemDefinition',
    'SystemSpec',
    'double_pendulum_energy',
    'double_pendulum_lagrangian',
    'force_sample',
    'get_system',
    'list_systems',
    'neptune_position',
    'radiation_drag_coefficient',
    'true_force',
    'true_forces',
    'SimConfig',
    'default_sim_config',
    'rk4_integrate',
    'rk4_rollout',
    'DataQualityConfig',
    'apply_coverage_wedge',
    'apply_imbalance',
    'build_quality_dataset',
    'polar_angle',
    'sample_gaussian_states',
    'load_samples_csv',
    'save_samples_csv',
]
