"""Deterministic pulse mathematics.

Spectral grids for a 640-pixel liquid-crystal shaper, polynomial spectral
phases, per-pixel phase masks, Fourier synthesis of the shaped temporal
field, and the scalar pulse metrics (peak intensity, two-photon signal)
that everything downstream consumes.

Conventions
-----------
Units are fs, rad/fs, nm, uJ, and TW/cm^2 throughout.  The temporal field
is the complex baseband envelope relative to the grid's center-pixel
frequency; a spectral phase ``tau * (omega - omega_ref)`` delays the pulse
by ``+tau``.  Phase is stored unwrapped in radians; nothing in this module
wraps it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

#: Speed of light in nm/fs.
C_NM_PER_FS = 299.792458

#: Default transform length (power of two, >= 4x the 640-pixel grid).
FFT_SAMPLES = 32768

#: Default temporal sample spacing in fs.  With FFT_SAMPLES this gives a
#: 65.5 ps window, enough to hold pulses chirped to the scan-range corners
#: while still sampling a ~23 fs transform-limited pulse at ~11 points.
DT_FS = 2.0


class InvalidGridError(ValueError):
    """Spectral grid parameters are unusable (bad spacing, wavelength <= 0)."""


class IncompatibleMaskError(ValueError):
    """Phase masks sampled on different grids cannot be combined."""


class DegenerateSpectrumError(ValueError):
    """Spectral amplitude carries no energy; nothing to synthesize."""


@dataclass(frozen=True)
class SpectralGrid:
    """Pixel <-> wavelength <-> angular-frequency mapping of one shaper.

    ``wavelength(i) = center_wavelength_nm + (i - center_pixel) * nm_per_pixel``
    increases strictly with pixel index, so ``omega(i) = 2*pi*c / wavelength(i)``
    decreases strictly.
    """

    pixel_count: int
    center_pixel: int
    center_wavelength_nm: float
    nm_per_pixel: float

    def __post_init__(self):
        if self.pixel_count < 2:
            raise InvalidGridError(f"pixel_count must be >= 2, got {self.pixel_count}")
        if not 0 <= self.center_pixel < self.pixel_count:
            raise InvalidGridError(f"center_pixel {self.center_pixel} outside grid")
        if not (self.nm_per_pixel > 0 and math.isfinite(self.nm_per_pixel)):
            raise InvalidGridError(f"nm_per_pixel must be positive, got {self.nm_per_pixel}")
        if not (self.center_wavelength_nm > 0 and math.isfinite(self.center_wavelength_nm)):
            raise InvalidGridError(
                f"center_wavelength_nm must be positive, got {self.center_wavelength_nm}"
            )
        if self.wavelength(0) <= 0:
            raise InvalidGridError("wavelength crosses zero inside the grid")

    def wavelength(self, pixel) -> float | np.ndarray:
        """Wavelength in nm at a (possibly fractional or array) pixel index."""
        return self.center_wavelength_nm + (np.asarray(pixel) - self.center_pixel) * self.nm_per_pixel

    def omega(self, pixel) -> float | np.ndarray:
        """Angular frequency in rad/fs at a pixel index."""
        return 2.0 * math.pi * C_NM_PER_FS / self.wavelength(pixel)

    @cached_property
    def wavelengths_nm(self) -> np.ndarray:
        w = self.wavelength(np.arange(self.pixel_count))
        w.setflags(write=False)
        return w

    @cached_property
    def omegas(self) -> np.ndarray:
        o = 2.0 * math.pi * C_NM_PER_FS / self.wavelengths_nm
        o.setflags(write=False)
        return o

    @property
    def center_omega(self) -> float:
        return 2.0 * math.pi * C_NM_PER_FS / self.center_wavelength_nm

    @property
    def tag(self) -> str:
        """Canonical identifier; masks may be combined only on equal tags."""
        return (
            f"n{self.pixel_count}c{self.center_pixel}"
            f"w{self.center_wavelength_nm:.6g}d{self.nm_per_pixel:.6g}"
        )


@dataclass(frozen=True)
class PolynomialPhase:
    """Polynomial spectral phase: A*(w-w0)^2 + B*(w-w0)^3 + C*(w-w0)^4.

    A in fs^2, B in fs^3, C in fs^4, expansion center w0 in rad/fs.
    (0, 0, 0) is the flat phase regardless of w0.
    """

    a_fs2: float
    b_fs3: float
    c_fs4: float
    omega0: float

    def __post_init__(self):
        for name in ("a_fs2", "b_fs3", "c_fs4", "omega0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def flat(cls, omega0: float = 0.0) -> "PolynomialPhase":
        return cls(0.0, 0.0, 0.0, omega0)


@dataclass(frozen=True)
class PhaseMask:
    """Per-pixel spectral phase in radians, tied to one grid by tag."""

    values: np.ndarray
    grid_tag: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("phase mask must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValueError("phase mask entries must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def zero(cls, grid: SpectralGrid) -> "PhaseMask":
        return cls(np.zeros(grid.pixel_count), grid.tag)


def make_grid(
    pixel_count: int,
    center_pixel: int,
    center_wavelength_nm: float,
    nm_per_pixel: float,
) -> SpectralGrid:
    """Build a validated :class:`SpectralGrid`."""
    return SpectralGrid(pixel_count, center_pixel, center_wavelength_nm, nm_per_pixel)


def eval_polynomial_phase(poly: PolynomialPhase, grid: SpectralGrid) -> PhaseMask:
    """Sample a polynomial phase onto the grid pixels.

    No wrapping is applied; values are exact polynomial evaluations at each
    pixel's angular frequency.
    """
    d = grid.omegas - poly.omega0
    phase = poly.a_fs2 * d**2 + poly.b_fs3 * d**3 + poly.c_fs4 * d**4
    return PhaseMask(phase, grid.tag)


def compose_masks(a: PhaseMask, b: PhaseMask) -> PhaseMask:
    """Element-wise sum of two masks on the same grid (associative, commutative)."""
    if a.grid_tag != b.grid_tag:
        raise IncompatibleMaskError(
            f"cannot compose masks from grids {a.grid_tag!r} and {b.grid_tag!r}"
        )
    if len(a) != len(b):
        raise IncompatibleMaskError("mask lengths differ")
    return PhaseMask(a.values + b.values, a.grid_tag)


@dataclass(frozen=True)
class SpectralField:
    """Shaped pulse before time-domain synthesis.

    ``amplitude`` is per-pixel sqrt(spectral intensity) in arbitrary units;
    the absolute scale is fixed later by the requested pulse energy.
    """

    amplitude: np.ndarray
    phase: PhaseMask
    grid: SpectralGrid

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=float)
        if amp.shape != (self.grid.pixel_count,):
            raise ValueError("amplitude length must match the grid")
        if len(self.phase) != self.grid.pixel_count:
            raise ValueError("phase length must match the grid")
        if self.phase.grid_tag != self.grid.tag:
            raise IncompatibleMaskError("phase mask belongs to a different grid")
        if np.any(amp < 0) or not np.all(np.isfinite(amp)):
            raise ValueError("amplitude must be finite and non-negative")
        if not np.any(amp > 0):
            raise DegenerateSpectrumError("spectral amplitude is identically zero")
        amp = amp.copy()
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)


@dataclass(frozen=True)
class TemporalField:
    """Complex field envelope on a uniform time grid.

    ``energy_scale`` declares the physical meaning of the samples: a value
    of 1.0 means ``sum |E|^2 * dt`` is the pulse energy in uJ, so |E(t)|^2
    is instantaneous power in uJ/fs (= GW).
    """

    samples: np.ndarray
    dt: float
    energy_scale: float = 1.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        s = np.asarray(self.samples, dtype=complex)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        n = self.samples.size
        return (np.arange(n) - n // 2) * self.dt

    @property
    def intensity(self) -> np.ndarray:
        """Instantaneous power |E(t)|^2 in uJ/fs."""
        return np.abs(self.samples) ** 2

    @property
    def energy_uJ(self) -> float:
        return float(np.sum(self.intensity) * self.dt * self.energy_scale)


def uniform_complex_spectrum(
    field: SpectralField, n_samples: int = FFT_SAMPLES, dt_fs: float = DT_FS
) -> tuple[np.ndarray, np.ndarray]:
    """Resample a pixel-sampled field onto the uniform baseband frequency grid.

    Returns ``(nu, S)`` where ``nu`` are baseband offsets from the grid's
    center-pixel frequency (length ``n_samples``, spacing ``2*pi/(n*dt)``)
    and ``S`` the complex spectral amplitude, zero outside the pixel band.
    Amplitude and phase are interpolated linearly in frequency.
    """
    if n_samples < 4 * field.grid.pixel_count:
        raise ValueError("n_samples must be at least 4x the pixel count")
    if n_samples & (n_samples - 1):
        raise ValueError("n_samples must be a power of two")
    d_nu = 2.0 * math.pi / (n_samples * dt_fs)
    nu = (np.arange(n_samples) - n_samples // 2) * d_nu

    omega_ref = field.grid.center_omega
    # Pixel omegas decrease with index; interpolation wants ascending.
    om = field.grid.omegas[::-1] - omega_ref
    amp = field.amplitude[::-1]
    ph = field.phase.values[::-1]

    lo = int(np.searchsorted(nu, om[0], side="left"))
    hi = int(np.searchsorted(nu, om[-1], side="right"))
    band = nu[lo:hi]

    spectrum = np.zeros(n_samples, dtype=complex)
    amp_u = np.interp(band, om, amp)
    ph_u = np.interp(band, om, ph)
    spectrum[lo:hi] = amp_u * np.exp(1j * ph_u)
    return nu, spectrum


def synthesize_temporal(
    field: SpectralField,
    pulse_energy_uJ: float,
    n_samples: int = FFT_SAMPLES,
    dt_fs: float = DT_FS,
) -> TemporalField:
    """Fourier-synthesize the temporal envelope of a shaped pulse.

    The pixel-sampled spectrum is resampled onto a uniform frequency grid,
    normalized so its spectral energy ``sum |S|^2 * d_nu`` equals
    ``pulse_energy_uJ``, and transformed with a Parseval-exact DFT, so the
    returned field satisfies ``sum |E|^2 * dt == pulse_energy_uJ`` to
    machine precision.
    """
    if not (pulse_energy_uJ > 0 and math.isfinite(pulse_energy_uJ)):
        raise ValueError("pulse_energy_uJ must be positive and finite")
    nu, spectrum = uniform_complex_spectrum(field, n_samples, dt_fs)
    d_nu = nu[1] - nu[0]
    spec_energy = float(np.sum(np.abs(spectrum) ** 2) * d_nu)
    if spec_energy <= 0.0:
        raise DegenerateSpectrumError("resampled spectrum carries no energy")
    spectrum *= math.sqrt(pulse_energy_uJ / spec_energy)

    # E(t_n) = sum_k S_k exp(-i nu_k t_n), scaled so Parseval holds exactly:
    # sum |E|^2 dt == sum |S|^2 d_nu.
    scale = math.sqrt(d_nu / (n_samples * dt_fs))
    samples = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(spectrum))) * scale
    return TemporalField(samples, dt_fs)


def peak_intensity(field: TemporalField, spot_radius_um: float) -> float:
    """Peak focal intensity in TW/cm^2 for a flat-top spot of given radius.

    max|E(t)|^2 is instantaneous power in uJ/fs (= 1e9 W); dividing by the
    spot area converts to intensity.
    """
    if spot_radius_um <= 0:
        raise ValueError("spot_radius_um must be positive")
    peak_power_w = float(np.max(field.intensity)) * field.energy_scale * 1e9
    area_cm2 = math.pi * (spot_radius_um * 1e-4) ** 2
    return peak_power_w / area_cm2 / 1e12


def tpa_signal(field: TemporalField) -> float:
    """Two-photon-absorption signal: integral of |E(t)|^4 over time.

    Maximized, at fixed spectrum and energy, by the flat spectral phase
    (the transform-limited pulse); used as the calibration reference.
    """
    return float(np.sum(field.intensity**2) * field.dt)


def intensity_fwhm(field: TemporalField) -> float:
    """FWHM of |E(t)|^2 in fs, with linear interpolation at the crossings."""
    inten = field.intensity
    peak = inten.max()
    if peak <= 0:
        raise DegenerateSpectrumError("field carries no energy")
    half = 0.5 * peak
    above = inten >= half
    idx = np.nonzero(above)[0]
    i0, i1 = idx[0], idx[-1]
    t = field.times

    def cross(i_out, i_in):
        if i_out < 0 or i_out >= inten.size:
            return t[i_in]
        f = (half - inten[i_out]) / (inten[i_in] - inten[i_out])
        return t[i_out] + f * (t[i_in] - t[i_out])

    return float(cross(i1 + 1, i1) - cross(i0 - 1, i0))
