"""Simulation toolkit for standing-wave dipole-trap transport of cold atoms."""

__version__ = "0.1.0"

from .core import (
    TrapConfig,
    DerivedTrap,
    derive,
    effective_detuning,
    thermal_localization,
    local_depth,
    potential,
    force,
    default_config,
)
from .sweep import (
    SweepProfile,
    AomModel,
    sw_state,
    cycle_count,
    depth_scaling,
    transport_profile,
    shuttle_profile,
    smooth_transport_profile,
    static_profile,
)
from .dynamics import (
    AtomState,
    NoiseChannels,
    IntegrateOpts,
    Trajectory,
    make_rng,
    integrate,
    is_bound,
    apply_recoil,
    apply_phase_noise,
)
from .analytics import (
    tilted_cut,
    effective_depth,
    effective_depth_curve,
    vanish_distance_tangency,
    accelerated_potential,
    equilibrium_shift,
    tilted_well_depth,
    worst_case_jump_energy,
    jump_energy_small_a,
    jump_loss_threshold,
    DetectionModel,
    detection_probability,
)
from .experiments import (
    ExperimentSpec,
    ScanResult,
    ScanPoint,
    confidence_interval,
    sample_thermal,
    axial_energy_temperature,
    run_distance_scan,
    run_acceleration_scan,
    run_shuttle_scan,
    run_lowering_scan,
)

__all__ = [
    "TrapConfig", "DerivedTrap", "derive", "effective_detuning",
    "thermal_localization", "local_depth", "potential", "force",
    "default_config",
    "SweepProfile", "AomModel", "sw_state", "cycle_count", "depth_scaling",
    "transport_profile", "shuttle_profile", "smooth_transport_profile",
    "static_profile",
    "AtomState", "NoiseChannels", "IntegrateOpts", "Trajectory", "make_rng",
    "integrate", "is_bound", "apply_recoil", "apply_phase_noise",
    "tilted_cut", "effective_depth", "effective_depth_curve",
    "vanish_distance_tangency", "accelerated_potential", "equilibrium_shift",
    "tilted_well_depth", "worst_case_jump_energy", "jump_energy_small_a",
    "jump_loss_threshold", "DetectionModel", "detection_probability",
    "ExperimentSpec", "ScanResult", "ScanPoint", "confidence_interval",
    "sample_thermal", "axial_energy_temperature",
    "run_distance_scan", "run_acceleration_scan", "run_shuttle_scan",
    "run_lowering_scan",
    "__version__",
]
