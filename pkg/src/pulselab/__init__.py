"""Virtual pulse-shaping laboratory.

Simulates two non-identical femtosecond laser/shaper systems, optimizes
polynomial spectral-phase masks with a seeded genetic algorithm against a
calibrated halomethane fragmentation surrogate, and runs landscape-scan,
mask-transfer, and family-matrix campaigns.
"""

__version__ = "0.1.0"

from .pulses import (
    SpectralGrid,
    PolynomialPhase,
    PhaseMask,
    SpectralField,
    TemporalField,
    make_grid,
    eval_polynomial_phase,
    compose_masks,
    synthesize_temporal,
    peak_intensity,
    tpa_signal,
)
from .lab import (
    LaserSystemSpec,
    LaserSystem,
    TransferPolicy,
    make_laser_system,
    shape_pulse,
    calibrate_tl,
    compute_pixel_shift,
    transfer_mask,
    system_i_spec,
    system_ii_spec,
)
from .ga import GAConfig, Individual, OptimizationTrace, run_ga, best_mask
from .fragmentation import (
    SubstrateSpec,
    IonSignals,
    ObjectiveResult,
    IonSpectrum,
    ion_signals,
    objective_J,
    normalized_J,
    synth_tof_spectrum,
    intensity_diagnostics,
    load_registry,
)

__all__ = [
    "SpectralGrid",
    "PolynomialPhase",
    "PhaseMask",
    "SpectralField",
    "TemporalField",
    "make_grid",
    "eval_polynomial_phase",
    "compose_masks",
    "synthesize_temporal",
    "peak_intensity",
    "tpa_signal",
    "LaserSystemSpec",
    "LaserSystem",
    "TransferPolicy",
    "make_laser_system",
    "shape_pulse",
    "calibrate_tl",
    "compute_pixel_shift",
    "transfer_mask",
    "system_i_spec",
    "system_ii_spec",
    "GAConfig",
    "Individual",
    "OptimizationTrace",
    "run_ga",
    "best_mask",
    "SubstrateSpec",
    "IonSignals",
    "ObjectiveResult",
    "IonSpectrum",
    "ion_signals",
    "objective_J",
    "normalized_J",
    "synth_tof_spectrum",
    "intensity_diagnostics",
    "load_registry",
]
