"""Calibrated surrogate for halomethane fragmentation.

Maps a shaped temporal field plus its focal peak intensity to the two
integrated ion signals of the control objective: S1, the halogen ion to be
enhanced, and S2, the methyl-halide ion favored by short intense pulses.
The channel structure is the minimal one that reproduces the lab
phenomenology:

* S2 follows a high-order multiphoton rate with fluence-like saturation,
  so it stays finite across the whole chirp scan range and only collapses
  for extremely stretched pulses.
* S1 is a dissociation/ionization sequence: a saturating third-order rate,
  weighted by the normalized cumulative fluence Q(t) (pulses that deliver
  intensity late, onto already-produced fragments, win), a log-duration
  resonance around a substrate-specific preferred stretch, and a
  fragment-ionization efficiency that saturates with peak intensity.
* A sigmoidal Coulomb-explosion channel adds halogen ions at high peak
  intensity and feeds the doublet structure of the synthetic spectra.

All per-substrate constants live in the shipped registry
(``data/substrates.json``), frozen once by ``scripts/calibrate_registry.py``.
Absolute signal scales are arbitrary units; only ratios are meaningful.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np

from .pulses import TemporalField

#: Low-intensity saturation knees of the two channel rates (TW/cm^2).
SAT_INTENSITY_S1 = 2.0
SAT_INTENSITY_S2 = 0.5

#: Width (in ln intensity) of the fragment-ionization saturation sigmoid.
ION_EFF_LN_WIDTH = 0.35
#: Floor of the fragment-ionization efficiency at vanishing intensity.
ION_EFF_FLOOR = 0.25

#: Weight of the signed-chirp tiebreak on the sequencing tilt.
CHIRP_TILT_WEIGHT = 0.035
#: Scale (rad) that saturates the signed-chirp moment.
CHIRP_MOMENT_SCALE = 7.0

#: Fluence quantiles bounding the "effective duration" window; the central
#: 76.1% of the fluence spans exactly the FWHM for a Gaussian profile.
DURATION_Q_LO = 0.11945
DURATION_Q_HI = 0.88055

#: Flight-time calibration: t = TOF_CALIB_US * sqrt(m/q).
TOF_CALIB_US = 0.72


class EmptySpectrumError(ValueError):
    """Diagnostics require at least one peak."""


class NormalizationError(ValueError):
    """Transform-limited baseline yield must be positive."""


@dataclass(frozen=True)
class SubstrateSpec:
    """Registry entry for one compound.

    Channel parameters follow the surrogate structure: multiphoton orders
    ``n_ion``/``n_diss``, sequencing weight (strength of the
    cumulative-fluence asymmetry tilt), the preferred effective duration of
    the stretch resonance with its log-width and floors, the
    fragment-ionization intensity scale, Coulomb channel threshold/gain,
    and an optional intensity band where both product channels deplete
    (used by the one compound whose methyl-halide ion is fragile).
    """

    name: str
    family_index: int
    s1_label: str
    s2_label: str
    s1_mass_amu: float
    s2_mass_amu: float
    parent_mass_amu: float
    n_ion: int
    n_diss: int
    sequencing_weight: float
    preferred_sequencing: float
    sequencing_window: float
    preferred_stretch_fs: float
    stretch_ln_width: float
    resonance_floor_short: float
    resonance_floor_long: float
    ionization_scale_TWcm2: float
    coulomb_threshold_TWcm2: float
    coulomb_gain: float
    charge_state_thresholds: tuple[float, float, float]
    k1: float
    k2: float
    s2_threshold: float
    depletion_amp_s1: float = 0.0
    depletion_amp_s2: float = 0.0
    depletion_center_TWcm2: float = 50.0
    depletion_ln_width: float = 0.45
    split_coeff_us: float = 0.004

    def __post_init__(self):
        if not self.n_ion > self.n_diss >= 2:
            raise ValueError("need n_ion > n_diss >= 2")
        t = self.charge_state_thresholds
        if not (len(t) == 3 and t[0] < t[1] < t[2]):
            raise ValueError("charge-state thresholds must increase with q")
        if self.preferred_stretch_fs <= 0 or self.stretch_ln_width <= 0:
            raise ValueError("stretch resonance parameters must be positive")
        if self.s2_threshold <= 0:
            raise ValueError("s2_threshold must be positive")


@dataclass(frozen=True)
class IonSignals:
    s1: float
    s2: float
    s1_coulomb_fraction: float

    def __post_init__(self):
        if self.s1 < 0 or self.s2 < 0 or not 0.0 <= self.s1_coulomb_fraction <= 1.0:
            raise ValueError("ion signals out of range")


@dataclass(frozen=True)
class ObjectiveResult:
    j: float
    j_tilde: float
    thresholded: bool


@dataclass(frozen=True)
class Peak:
    ion: str
    q: int
    flight_time_us: float
    amplitude: float
    doublet_split_us: float


@dataclass(frozen=True)
class IonSpectrum:
    peaks: tuple[Peak, ...]

    def __iter__(self):
        return iter(self.peaks)

    def __len__(self):
        return len(self.peaks)


# ---------------------------------------------------------------------------
# Channel ingredients
# ---------------------------------------------------------------------------


def _resonance(sub: SubstrateSpec, duration_fs: float) -> float:
    """Log-duration resonance with asymmetric floors, peak value 1."""
    x = math.log(duration_fs / sub.preferred_stretch_fs)
    core = math.exp(-(x**2) / (2.0 * sub.stretch_ln_width**2))
    lo, hi = sub.resonance_floor_short, sub.resonance_floor_long
    floor = lo + (hi - lo) / (1.0 + math.exp(-x / 0.4))
    return floor + (1.0 - floor) * core


def _ionization_efficiency(sub: SubstrateSpec, mean_intensity: float) -> float:
    """Fragment-ionization saturation: sigmoid in log mean intensity."""
    if mean_intensity <= 0.0:
        return ION_EFF_FLOOR
    x = math.log(mean_intensity / sub.ionization_scale_TWcm2) / ION_EFF_LN_WIDTH
    sig = 1.0 / (1.0 + math.exp(-x))
    return ION_EFF_FLOOR + (1.0 - ION_EFF_FLOOR) * sig


#: Width of the chirp-magnitude gate (distance of |chirp| from saturation).
CHIRP_GATE_WIDTH = 0.45


def _sequencing_tilt(sub: SubstrateSpec, seq: float, chirp_pref: float) -> float:
    """Resonant window in the sequencing moment, gated on chirp magnitude,
    plus a signed-chirp tiebreak.

    Both factors are flat at their tops (Gaussian maxima, saturated tanh),
    so small texture in the moments barely moves yields near the optimum.
    """
    window = math.exp(-((seq - sub.preferred_sequencing) ** 2) / (2.0 * sub.sequencing_window**2))
    gate = math.exp(-((abs(chirp_pref) - 1.0) ** 2) / (2.0 * CHIRP_GATE_WIDTH**2))
    base = (1.0 - sub.sequencing_weight) + sub.sequencing_weight * window * gate
    return max(base * (1.0 + CHIRP_TILT_WEIGHT * chirp_pref), 0.05)


def _coulomb_channel(sub: SubstrateSpec, peak_I: float) -> float:
    """Shifted sigmoid in peak intensity; exactly zero at zero intensity."""
    w = max(sub.coulomb_threshold_TWcm2 * 0.35, 1e-9)
    s = 1.0 / (1.0 + math.exp(-(peak_I - sub.coulomb_threshold_TWcm2) / w))
    s0 = 1.0 / (1.0 + math.exp(sub.coulomb_threshold_TWcm2 / w))
    return max(0.0, (s - s0) / (1.0 - s0))


def _depletion(sub: SubstrateSpec, mean_intensity: float) -> tuple[float, float]:
    """Depletion band: both product ions survive poorly in a window of
    characteristic intensity (secondary fragmentation of fragile ions)."""
    if (sub.depletion_amp_s1 == 0.0 and sub.depletion_amp_s2 == 0.0) or mean_intensity <= 0:
        return 1.0, 1.0
    x = math.log(mean_intensity / sub.depletion_center_TWcm2)
    band = math.exp(-(x**2) / (2.0 * sub.depletion_ln_width**2))
    return 1.0 - sub.depletion_amp_s1 * band, 1.0 - sub.depletion_amp_s2 * band


def ion_signals(
    sub: SubstrateSpec, field: TemporalField, peak_I: float, disable_sequencing: bool = False
) -> IonSignals:
    """Evaluate both product channels for one delivered pulse.

    ``peak_I`` is the focal peak intensity in TW/cm^2 (already including
    any per-system intensity scale); the field supplies the normalized
    temporal profile.  ``disable_sequencing`` removes the cumulative-fluence
    tilt, leaving the signals invariant under time reversal.
    """
    if peak_I < 0:
        raise ValueError("peak_I must be non-negative")
    raw = field.intensity
    m = float(raw.max())
    if m <= 0.0 or peak_I == 0.0:
        return IonSignals(0.0, 0.0, 0.0)

    dt = field.dt
    t = field.times
    I = raw * (peak_I / m)

    fluence = np.cumsum(I) * dt
    total = float(fluence[-1])
    # Effective duration: central-fluence window, equal to the FWHM for a
    # Gaussian profile and robust against weak wings and spike structure.
    t_lo = float(np.interp(DURATION_Q_LO * total, fluence, t))
    t_hi = float(np.interp(DURATION_Q_HI * total, fluence, t))
    duration = max(t_hi - t_lo, dt)
    mean_intensity = total / duration

    dep1, dep2 = _depletion(sub, mean_intensity)

    r2 = I**sub.n_ion / (1.0 + (I / SAT_INTENSITY_S2) ** (sub.n_ion - 1))
    s2 = sub.k2 * float(np.sum(r2)) * dt * dep2

    r1 = I**sub.n_diss / (1.0 + (I / SAT_INTENSITY_S1) ** (sub.n_diss - 1))
    w1 = float(np.sum(r1)) * dt

    tilt = 1.0
    if not disable_sequencing and w1 > 0:
        # Midpoint cumulative fluence: exactly antisymmetric under reversal.
        Q = (fluence - 0.5 * I * dt) / total
        # Positive when the intense part of the pulse precedes the fluence
        # center: dissociate first, ionize the fragments with the tail.
        seq = float(np.sum(r1 * (1.0 - 2.0 * Q))) * dt / w1
        # Signed chirp moment (fluence-weighted correlation of instantaneous
        # frequency with time) breaks the tie between the two chirp signs.
        tbar = float(np.sum(I * t)) * dt / total
        edot = np.gradient(field.samples, dt)
        inst = np.imag(np.conj(field.samples) * edot) * (peak_I / m)
        chirp_pref = -math.tanh(float(np.sum(inst * (t - tbar))) * dt / total / CHIRP_MOMENT_SCALE)
        tilt = _sequencing_tilt(sub, seq, chirp_pref)

    diss = (
        sub.k1
        * w1
        * dep1
        * _resonance(sub, duration)
        * _ionization_efficiency(sub, mean_intensity)
        * tilt
    )
    # Coulomb yield scales with the number of molecules seeing the focus
    # (fluence) times the saturated explosion probability.
    coul = sub.coulomb_gain * _coulomb_channel(sub, peak_I) * total * 1e-6
    s1 = diss + coul
    frac = coul / s1 if s1 > 0 else 0.0
    return IonSignals(s1, s2, frac)


def objective_J(signals: IonSignals, s2_threshold: float, mode: str = "ga") -> float:
    """Ratio objective with the small-S2 floor rule.

    ``ga``: pulses whose S2 falls below the threshold score exactly zero.
    ``report``: the ratio is reported against max(S2, threshold) instead,
    the convention used for yield tables.
    """
    if s2_threshold <= 0:
        raise ValueError("s2_threshold must be positive")
    if mode == "ga":
        if signals.s2 < s2_threshold:
            return 0.0
        return signals.s1 / signals.s2
    if mode == "report":
        return signals.s1 / max(signals.s2, s2_threshold)
    raise ValueError(f"unknown objective mode {mode!r}")


def objective_result(
    signals: IonSignals, s2_threshold: float, j_tl: float, mode: str = "ga"
) -> ObjectiveResult:
    j = objective_J(signals, s2_threshold, mode)
    return ObjectiveResult(j, normalized_J(j, j_tl), signals.s2 < s2_threshold)


def normalized_J(j: float, j_tl: float) -> float:
    """Yield normalized to the transform-limited baseline (Eq. of record)."""
    if j_tl <= 0 or not math.isfinite(j_tl):
        raise NormalizationError(f"TL baseline must be positive, got {j_tl}")
    return j / j_tl


# ---------------------------------------------------------------------------
# Synthetic time-of-flight spectra
# ---------------------------------------------------------------------------


def _halogen_symbol(label: str) -> str:
    for sym in ("Cl", "Br", "I"):
        if label == sym or label.startswith(sym + "+") or label == sym:
            return sym
    return label


def synth_tof_spectrum(sub: SubstrateSpec, field: TemporalField, peak_I: float) -> IonSpectrum:
    """Peak list for parent, methyl-halide, and halogen charge states.

    Flight times follow t = k * sqrt(m/q); halogen charge state q appears
    only above its intensity threshold; halogen peaks carry a Coulomb
    doublet whose split grows as sqrt(peak_I).
    """
    sig = ion_signals(sub, field, peak_I)
    peaks: list[Peak] = []

    def t_of(m, q):
        return TOF_CALIB_US * math.sqrt(m / q)

    split = sub.split_coeff_us * math.sqrt(max(peak_I, 0.0)) if sig.s1_coulomb_fraction > 0 else 0.0

    if sig.s2 > 0:
        peaks.append(Peak(sub.name, 1, t_of(sub.parent_mass_amu, 1), 0.4 * sig.s2, 0.0))
        peaks.append(Peak(sub.s2_label, 1, t_of(sub.s2_mass_amu, 1), sig.s2, 0.0))
    if sig.s1 > 0:
        halogen = _halogen_symbol(sub.s1_label)
        peaks.append(Peak(halogen, 1, t_of(sub.s1_mass_amu, 1), sig.s1, split))
        for q, thr in zip((2, 3, 4), sub.charge_state_thresholds):
            if peak_I >= thr:
                peaks.append(
                    Peak(halogen, q, t_of(sub.s1_mass_amu, q), sig.s1 * 0.6 ** (q - 1), split)
                )
    return IonSpectrum(tuple(peaks))


def intensity_diagnostics(spectrum: IonSpectrum) -> dict:
    """Highest halogen charge state and largest Coulomb doublet split."""
    if len(spectrum) == 0:
        raise EmptySpectrumError("spectrum has no peaks")
    halogen_qs = [p.q for p in spectrum if p.ion in ("Cl", "Br", "I")]
    max_charge = max(halogen_qs) if halogen_qs else 0
    max_split = max((p.doublet_split_us for p in spectrum), default=0.0)
    return {"max_charge": max_charge, "max_split_us": max_split}


def spectrum_csv_rows(spectrum: IonSpectrum) -> list[tuple]:
    return [
        (p.ion, p.q, p.flight_time_us, p.amplitude, p.doublet_split_us) for p in spectrum
    ]


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


def _spec_from_dict(d: dict) -> SubstrateSpec:
    d = dict(d)
    d["charge_state_thresholds"] = tuple(d["charge_state_thresholds"])
    return SubstrateSpec(**d)


def load_registry(path=None) -> dict[str, SubstrateSpec]:
    """Load the frozen substrate registry (name -> spec), Table-4 ordering."""
    if path is None:
        text = resources.files("pulselab.data").joinpath("substrates.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    entries = json.loads(text)
    specs = [_spec_from_dict(e) for e in entries]
    specs.sort(key=lambda s: s.family_index)
    idx = [s.family_index for s in specs]
    if idx != list(range(1, len(specs) + 1)):
        raise ValueError(f"registry family indices must be 1..{len(specs)}, got {idx}")
    return {s.name: s for s in specs}


def save_registry(specs: list[SubstrateSpec], path) -> None:
    entries = [asdict(s) for s in sorted(specs, key=lambda s: s.family_index)]
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=1)
        fh.write("\n")
