"""Virtual laser-plus-shaper apparatus.

Each :class:`LaserSystem` owns a spectral grid, a Gaussian amplitude
spectrum, a hidden seeded residual dispersion (cubic + quartic, the part a
grating compressor cannot remove), and, once calibrated, a transform-limit
reference mask found by maximizing the two-photon signal with the genetic
algorithm.  Shaped pulses always carry residual + reference + mask.

Cross-system mask transfer supports the three lab policies: verbatim pixel
copy (the default), integer pixel shift with zero-filled vacated pixels,
and resampling phase-versus-wavelength onto the target grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import pulses
from .ga import GAConfig, OptimizationTrace, run_ga
from .pulses import (
    C_NM_PER_FS,
    IncompatibleMaskError,
    PhaseMask,
    PolynomialPhase,
    SpectralField,
    SpectralGrid,
    TemporalField,
    eval_polynomial_phase,
    peak_intensity,
    tpa_signal,
)


class UncalibratedSystemError(RuntimeError):
    """shape_pulse needs a TL reference unless calibration explicitly bypasses it."""


class CalibrationError(RuntimeError):
    """Calibration missed the 99% two-photon bar; carries the best ratio found."""

    def __init__(self, ratio: float):
        super().__init__(f"calibration reached only {ratio:.4f} of the analytic optimum")
        self.ratio = ratio


class TransferRangeError(ValueError):
    """Source center wavelength falls outside the target grid."""


@dataclass(frozen=True)
class LaserSystemSpec:
    """Everything observable about one apparatus (Tables of the lab notebook).

    ``intensity_scale`` is the dimensionless knob that folds every unmodeled
    delivery effect (spatio-temporal coupling, focus quality) into a single
    multiplier on peak intensity.
    """

    name: str
    grid: SpectralGrid
    bandwidth_fwhm_nm: float
    delivered_energy_uJ: float
    spot_radius_um: float
    intensity_scale: float
    residual_phase_seed: int
    residual_magnitude: tuple[float, float, float] = (0.0, 2.0e4, 2.0e5)

    def __post_init__(self):
        if self.bandwidth_fwhm_nm <= 0:
            raise ValueError("bandwidth_fwhm_nm must be positive")
        if self.delivered_energy_uJ <= 0:
            raise ValueError("delivered_energy_uJ must be positive")
        if self.spot_radius_um <= 0:
            raise ValueError("spot_radius_um must be positive")
        if not 0.0 < self.intensity_scale <= 2.0:
            raise ValueError("intensity_scale must be in (0, 2]")
        if len(self.residual_magnitude) != 3 or any(m < 0 for m in self.residual_magnitude):
            raise ValueError("residual_magnitude must be three non-negative bounds")

    @property
    def amplitude(self) -> np.ndarray:
        """Gaussian spectral amplitude (FWHM = bandwidth) sampled at the pixels."""
        width = self.bandwidth_fwhm_nm * 2.0 * math.pi * C_NM_PER_FS / self.grid.center_wavelength_nm**2
        d = self.grid.omegas - self.grid.center_omega
        return np.exp(-4.0 * math.log(2.0) * d**2 / width**2)


@dataclass
class LaserSystem:
    """A spec plus its hidden residual phase and (once set) TL reference.

    Mutable only through :func:`calibrate_tl`, which assigns
    ``tl_reference`` exactly once per session; everything else treats the
    system as immutable.
    """

    spec: LaserSystemSpec
    residual_phase: PhaseMask
    tl_reference: PhaseMask | None = None

    @property
    def grid(self) -> SpectralGrid:
        return self.spec.grid

    @property
    def calibrated(self) -> bool:
        return self.tl_reference is not None


def make_laser_system(spec: LaserSystemSpec) -> LaserSystem:
    """Instantiate the apparatus, drawing its residual dispersion from the seed.

    The residual is a cubic+quartic polynomial about the center-pixel
    frequency with coefficients uniform in +-residual_magnitude; second
    order is assumed compressor-removed.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.residual_phase_seed)))
    mag = spec.residual_magnitude
    coeff = [rng.uniform(-m, m) if m > 0 else 0.0 for m in mag]
    poly = PolynomialPhase(coeff[0], coeff[1], coeff[2], spec.grid.center_omega)
    return LaserSystem(spec=spec, residual_phase=eval_polynomial_phase(poly, spec.grid))


def system_i_spec(seed: int = 101, intensity_scale: float = 1.0) -> LaserSystemSpec:
    """Default first apparatus: 800 nm center, 0.155 nm/pixel, 40 um spot."""
    return LaserSystemSpec(
        name="I",
        grid=SpectralGrid(640, 320, 800.0, 0.155),
        bandwidth_fwhm_nm=57.5,
        delivered_energy_uJ=375.0,
        spot_radius_um=20.0,
        intensity_scale=intensity_scale,
        residual_phase_seed=seed,
    )


def system_ii_spec(seed: int = 202, intensity_scale: float = 0.5) -> LaserSystemSpec:
    """Default second apparatus: blue-shifted 791 nm center, coarser pixels,
    45 um spot, and half the delivered peak intensity."""
    return LaserSystemSpec(
        name="II",
        grid=SpectralGrid(640, 320, 791.0, 0.179),
        bandwidth_fwhm_nm=51.5,
        delivered_energy_uJ=355.0,
        spot_radius_um=22.5,
        intensity_scale=intensity_scale,
        residual_phase_seed=seed,
    )


# ---------------------------------------------------------------------------
# Fast synthesis path: per-grid resampling tables are pure functions of the
# (immutable) spec, so caching them is safe under concurrency.
# ---------------------------------------------------------------------------

_SYNTH_CACHE: dict[tuple, dict] = {}


def _synth_tables(spec: LaserSystemSpec, n_samples: int, dt_fs: float) -> dict:
    key = (spec.grid.tag, spec.bandwidth_fwhm_nm, n_samples, dt_fs)
    tab = _SYNTH_CACHE.get(key)
    if tab is not None:
        return tab
    d_nu = 2.0 * math.pi / (n_samples * dt_fs)
    nu = (np.arange(n_samples) - n_samples // 2) * d_nu
    omega_ref = spec.grid.center_omega
    om = spec.grid.omegas[::-1] - omega_ref
    lo = int(np.searchsorted(nu, om[0], side="left"))
    hi = int(np.searchsorted(nu, om[-1], side="right"))
    band = nu[lo:hi]
    amp_u = np.interp(band, om, spec.amplitude[::-1])
    tab = {
        "d_nu": d_nu,
        "lo": lo,
        "hi": hi,
        "band": band,
        "om": om,
        "amp_u": amp_u,
        "amp_energy": float(np.sum(amp_u**2) * d_nu),
        "scale": math.sqrt(d_nu / (n_samples * dt_fs)),
        "n": n_samples,
        "dt": dt_fs,
    }
    _SYNTH_CACHE[key] = tab
    return tab


def _synthesize_fast(spec: LaserSystemSpec, phase_pixels: np.ndarray, tab: dict) -> TemporalField:
    ph_u = np.interp(tab["band"], tab["om"], phase_pixels[::-1])
    spectrum = np.zeros(tab["n"], dtype=complex)
    np.multiply(tab["amp_u"], np.exp(1j * ph_u), out=spectrum[tab["lo"] : tab["hi"]])
    spectrum *= math.sqrt(spec.delivered_energy_uJ / tab["amp_energy"])
    samples = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(spectrum))) * tab["scale"]
    return TemporalField(samples, tab["dt"])


def shape_pulse(
    system: LaserSystem,
    mask: PhaseMask,
    bypass_reference: bool = False,
    n_samples: int = pulses.FFT_SAMPLES,
    dt_fs: float = pulses.DT_FS,
) -> TemporalField:
    """Synthesize the delivered field for a commanded mask.

    Total spectral phase is residual + TL reference + mask; calibration
    passes ``bypass_reference=True`` to probe the bare apparatus.
    """
    if mask.grid_tag != system.grid.tag:
        raise IncompatibleMaskError(
            f"mask grid {mask.grid_tag!r} does not match system grid {system.grid.tag!r}"
        )
    if not bypass_reference and system.tl_reference is None:
        raise UncalibratedSystemError(
            f"system {system.spec.name!r} has no TL reference; run calibrate_tl first"
        )
    total = system.residual_phase.values + mask.values
    if not bypass_reference:
        total = total + system.tl_reference.values
    tab = _synth_tables(system.spec, n_samples, dt_fs)
    return _synthesize_fast(system.spec, total, tab)


def effective_peak_intensity(system: LaserSystem, field: TemporalField) -> float:
    """Focal peak intensity in TW/cm^2 including the system's intensity scale."""
    return peak_intensity(field, system.spec.spot_radius_um) * system.spec.intensity_scale


def tl_field(system: LaserSystem) -> TemporalField:
    """Field of the calibrated flat-phase (zero-mask) pulse."""
    return shape_pulse(system, PhaseMask.zero(system.grid))


def default_calibration_ga(spec: LaserSystemSpec, seed: int = 0) -> GAConfig:
    """Calibration search box scaled to the compressor's expected distortion.

    The residual is bounded by the spec's residual_magnitude, so searching
    much beyond 2.5x that range only slows convergence.
    """
    m_a, m_b, m_c = spec.residual_magnitude
    bounds = (
        (-max(2.5 * m_a, 2.0e3), max(2.5 * m_a, 2.0e3)),
        (-max(2.5 * m_b, 1.0e4), max(2.5 * m_b, 1.0e4)),
        (-max(2.5 * m_c, 1.0e5), max(2.5 * m_c, 1.0e5)),
        (2.2, 2.5),
    )
    sigma = tuple(b[1] * 0.08 for b in bounds[:3]) + (0.004,)
    return GAConfig(
        population=40, generations=80, mutation_sigma=sigma, bounds=bounds, seed=seed
    ).with_omega0_bounds(spec.grid)


#: GA restarts allowed inside one calibration budget (seeds derived from the
#: caller's seed, so the whole procedure stays deterministic).
CALIBRATION_ATTEMPTS = 4


def calibrate_tl(
    system: LaserSystem,
    optimizer_config: GAConfig | None = None,
    seed: int = 0,
) -> PhaseMask:
    """Find and store the TL reference by maximizing the two-photon signal.

    The reference is the GA's best polynomial mask (applied with the
    reference path bypassed).  Quality gate: the reference must recover at
    least 99% of the two-photon signal of the analytic optimum, which is
    the exact negation of the residual phase.  Up to CALIBRATION_ATTEMPTS
    restarts with derived seeds count toward the budget.
    """

    def evaluator(params: PolynomialPhase) -> float:
        mask = eval_polynomial_phase(params, system.grid)
        return tpa_signal(shape_pulse(system, mask, bypass_reference=True))

    ideal = tpa_signal(
        shape_pulse(
            system,
            PhaseMask(-system.residual_phase.values, system.grid.tag),
            bypass_reference=True,
        )
    )

    best_trace = None
    for attempt in range(CALIBRATION_ATTEMPTS):
        attempt_seed = seed + attempt * 7919
        if optimizer_config is None:
            config = default_calibration_ga(system.spec, attempt_seed)
        else:
            config = replace(optimizer_config, seed=attempt_seed).with_omega0_bounds(system.grid)
        trace = run_ga(evaluator, config)
        if best_trace is None or trace.best_fitness > best_trace.best_fitness:
            best_trace = trace
        if trace.best_fitness / ideal >= 0.995:
            break

    ratio = best_trace.best_fitness / ideal
    if ratio < 0.99:
        raise CalibrationError(ratio)
    system.tl_reference = eval_polynomial_phase(best_trace.best_individual.params, system.grid)
    return system.tl_reference


# ---------------------------------------------------------------------------
# Mask transfer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransferPolicy:
    """How a mask moves between shapers.

    shift_pixels=0, resample=False is the verbatim pixel copy used as the
    default lab procedure; shift rolls pixel indices (vacated pixels get
    zero phase); resample interpolates phase as a function of wavelength
    onto the target grid, clamping beyond the source's wavelength span.
    """

    shift_pixels: int = 0
    resample: bool = False

    COPY = None  # filled in below

    def validate(self, pixel_count: int) -> None:
        if abs(self.shift_pixels) >= pixel_count:
            raise ValueError("|shift_pixels| must be smaller than the pixel count")
        if self.resample and self.shift_pixels:
            raise ValueError("resample and pixel shift are mutually exclusive")


TransferPolicy.COPY = TransferPolicy()


def compute_pixel_shift(source: LaserSystemSpec, target: LaserSystemSpec) -> int:
    """Pixel shift landing the source center wavelength on the nearest target pixel."""
    lam0 = source.grid.center_wavelength_nm
    tgrid = target.grid
    pixel = tgrid.center_pixel + (lam0 - tgrid.center_wavelength_nm) / tgrid.nm_per_pixel
    nearest = int(round(pixel))
    if not 0 <= nearest < tgrid.pixel_count:
        raise TransferRangeError(
            f"{lam0} nm falls outside the target grid (pixel {nearest})"
        )
    return nearest - source.grid.center_pixel


def transfer_mask(
    mask: PhaseMask,
    source: LaserSystem,
    target: LaserSystem,
    policy: TransferPolicy = TransferPolicy.COPY,
) -> PhaseMask:
    """Re-express a source-grid mask on the target grid under a policy."""
    if mask.grid_tag != source.grid.tag:
        raise IncompatibleMaskError("mask does not belong to the source system")
    policy.validate(source.grid.pixel_count)
    if source.grid.pixel_count != target.grid.pixel_count:
        raise IncompatibleMaskError("pixel counts differ; only like-for-like shapers supported")

    if policy.resample:
        src_wl = source.grid.wavelengths_nm
        tgt_wl = target.grid.wavelengths_nm
        values = np.interp(tgt_wl, src_wl, mask.values)
        return PhaseMask(values, target.grid.tag)

    values = mask.values
    s = policy.shift_pixels
    if s:
        shifted = np.zeros_like(values)
        if s > 0:
            shifted[s:] = values[:-s]
        else:
            shifted[:s] = values[-s:]
        values = shifted
    return PhaseMask(values, target.grid.tag)
