"""Pulse mathematics: grids, phases, synthesis, and scalar metrics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulselab.pulses import (
    C_NM_PER_FS,
    DegenerateSpectrumError,
    IncompatibleMaskError,
    InvalidGridError,
    PhaseMask,
    PolynomialPhase,
    SpectralField,
    SpectralGrid,
    compose_masks,
    eval_polynomial_phase,
    intensity_fwhm,
    make_grid,
    peak_intensity,
    synthesize_temporal,
    tpa_signal,
    uniform_complex_spectrum,
)

GRID_I = make_grid(640, 320, 800.0, 0.155)
GRID_II = make_grid(640, 320, 791.0, 0.179)


def gaussian_amplitude(grid, fwhm_nm):
    width = fwhm_nm * 2 * math.pi * C_NM_PER_FS / grid.center_wavelength_nm**2
    d = grid.omegas - grid.center_omega
    return np.exp(-4 * math.log(2) * d**2 / width**2)


def flat_field(grid, fwhm_nm):
    return SpectralField(gaussian_amplitude(grid, fwhm_nm), PhaseMask.zero(grid), grid)


def poly_field(grid, fwhm_nm, a=0.0, b=0.0, c=0.0, omega0=None):
    omega0 = grid.center_omega if omega0 is None else omega0
    mask = eval_polynomial_phase(PolynomialPhase(a, b, c, omega0), grid)
    return SpectralField(gaussian_amplitude(grid, fwhm_nm), mask, grid)


class TestGrid:
    def test_system_grids_center_wavelength(self):
        assert GRID_I.wavelength(320) == pytest.approx(800.0)
        assert GRID_II.wavelength(320) == pytest.approx(791.0)

    def test_pixel_step_is_dispersion(self):
        assert GRID_I.wavelength(321) - GRID_I.wavelength(320) == pytest.approx(0.155)

    def test_wavelength_monotone_omega_decreasing(self):
        assert np.all(np.diff(GRID_I.wavelengths_nm) > 0)
        assert np.all(np.diff(GRID_I.omegas) < 0)

    def test_invalid_grids_rejected(self):
        with pytest.raises(InvalidGridError):
            make_grid(640, 320, 800.0, -0.1)
        with pytest.raises(InvalidGridError):
            make_grid(640, 320, 800.0, 0.0)
        with pytest.raises(InvalidGridError):
            # wavelength crosses zero inside the grid
            make_grid(640, 639, 10.0, 5.0)
        with pytest.raises(InvalidGridError):
            make_grid(1, 0, 800.0, 0.155)

    @given(st.integers(min_value=2, max_value=1000), st.floats(0.01, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_monotonicity_property(self, n, step):
        grid = make_grid(n, n // 2, 800.0, step)
        wl = grid.wavelengths_nm
        assert np.all(np.diff(wl) > 0)


class TestPolynomialPhase:
    def test_flat_phase_zero_mask(self):
        mask = eval_polynomial_phase(PolynomialPhase.flat(GRID_I.center_omega), GRID_I)
        assert np.all(mask.values == 0.0)

    def test_quadratic_centered_is_even(self):
        mask = eval_polynomial_phase(
            PolynomialPhase(1.0, 0.0, 0.0, GRID_I.center_omega), GRID_I
        )
        assert mask.values[320] == pytest.approx(0.0, abs=1e-15)
        d = GRID_I.omegas - GRID_I.center_omega
        assert np.allclose(mask.values, d**2)

    def test_pointwise_oracle(self):
        # Independent per-pixel recomputation at the scan-range corners;
        # agreement to last-ulp rounding of the polynomial evaluation.
        a, b, c = 2.0e4, 4.0e5, 0.0
        omega0 = GRID_I.center_omega
        mask = eval_polynomial_phase(PolynomialPhase(a, b, c, omega0), GRID_I)
        for i in (0, 1, 100, 320, 500, 639):
            lam = 800.0 + (i - 320) * 0.155
            omega = 2.0 * math.pi * C_NM_PER_FS / lam
            d = omega - omega0
            expected = a * d * d + b * d * d * d + c * d * d * d * d
            assert mask.values[i] == pytest.approx(expected, rel=5e-15, abs=0.0)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            PolynomialPhase(math.nan, 0.0, 0.0, 2.35)


class TestComposeMasks:
    def test_identity(self):
        a = eval_polynomial_phase(PolynomialPhase(1e3, 0, 0, GRID_I.center_omega), GRID_I)
        z = PhaseMask.zero(GRID_I)
        assert np.array_equal(compose_masks(a, z).values, a.values)

    @given(st.floats(-1e4, 1e4), st.floats(-1e5, 1e5))
    @settings(max_examples=25, deadline=None)
    def test_commutative(self, a_coeff, b_coeff):
        m1 = eval_polynomial_phase(PolynomialPhase(a_coeff, 0, 0, GRID_I.center_omega), GRID_I)
        m2 = eval_polynomial_phase(PolynomialPhase(0, b_coeff, 0, GRID_I.center_omega), GRID_I)
        assert np.array_equal(compose_masks(m1, m2).values, compose_masks(m2, m1).values)

    def test_grid_mismatch_rejected(self):
        m1 = PhaseMask.zero(GRID_I)
        m2 = PhaseMask.zero(GRID_II)
        with pytest.raises(IncompatibleMaskError):
            compose_masks(m1, m2)

    def test_composition_matches_sequential_application(self):
        # Synthesizing with the composed mask equals multiplying the
        # resampled spectrum by the second phase factor.
        m1 = eval_polynomial_phase(PolynomialPhase(5e3, 0, 0, GRID_I.center_omega), GRID_I)
        m2 = eval_polynomial_phase(PolynomialPhase(0, 1e5, 0, GRID_I.center_omega), GRID_I)
        amp = gaussian_amplitude(GRID_I, 57.5)
        both = synthesize_temporal(
            SpectralField(amp, compose_masks(m1, m2), GRID_I), 100.0
        )
        nu, s1 = uniform_complex_spectrum(SpectralField(amp, m1, GRID_I))
        _, s2 = uniform_complex_spectrum(SpectralField(amp, m2, GRID_I))
        _, s0 = uniform_complex_spectrum(SpectralField(amp, PhaseMask.zero(GRID_I), GRID_I))
        _, s_both = uniform_complex_spectrum(
            SpectralField(amp, compose_masks(m1, m2), GRID_I)
        )
        band = np.abs(s0) > 1e-12 * np.abs(s0).max()
        sequential = s1[band] * s2[band] / np.abs(s0[band])
        np.testing.assert_allclose(s_both[band], sequential, rtol=1e-12)
        assert both.energy_uJ == pytest.approx(100.0, rel=1e-12)


class TestSynthesis:
    def test_tl_fwhm_matches_gaussian_tbp(self):
        # Narrow enough that the shaper window clips nothing relevant.
        fwhm_nm = 30.0
        field = flat_field(GRID_I, fwhm_nm)
        tf = synthesize_temporal(field, 100.0)
        width_omega = fwhm_nm * 2 * math.pi * C_NM_PER_FS / 800.0**2
        expected = 4.0 * math.log(2.0) / (width_omega / math.sqrt(2.0))
        assert intensity_fwhm(tf) == pytest.approx(expected, rel=0.05)

    def test_energy_normalization_exact(self):
        tf = synthesize_temporal(flat_field(GRID_I, 57.5), 375.0)
        assert tf.energy_uJ == pytest.approx(375.0, rel=1e-12)

    def test_energy_scaling_linear(self):
        f = poly_field(GRID_I, 57.5, a=3e3)
        one = synthesize_temporal(f, 100.0)
        two = synthesize_temporal(f, 200.0)
        np.testing.assert_allclose(
            2.0 * one.intensity,
            two.intensity,
            rtol=1e-9,
            atol=1e-9 * two.intensity.max(),
        )

    def test_constant_phase_offset_invariant(self):
        f0 = poly_field(GRID_I, 57.5, a=2e3, b=5e4)
        base = eval_polynomial_phase(
            PolynomialPhase(2e3, 5e4, 0, GRID_I.center_omega), GRID_I
        )
        offset = PhaseMask(base.values + 1.234, GRID_I.tag)
        f1 = SpectralField(gaussian_amplitude(GRID_I, 57.5), offset, GRID_I)
        i0 = synthesize_temporal(f0, 50.0).intensity
        i1 = synthesize_temporal(f1, 50.0).intensity
        np.testing.assert_allclose(i0, i1, rtol=1e-9, atol=1e-9 * i0.max())

    def test_linear_phase_is_time_shift(self):
        # tau * (omega - omega_ref) with tau = m * dt shifts by m samples.
        tf0 = synthesize_temporal(flat_field(GRID_I, 57.5), 50.0)
        m = 7
        tau = m * tf0.dt
        phase = tau * (GRID_I.omegas - GRID_I.center_omega)
        f = SpectralField(
            gaussian_amplitude(GRID_I, 57.5), PhaseMask(phase, GRID_I.tag), GRID_I
        )
        tf1 = synthesize_temporal(f, 50.0)
        np.testing.assert_allclose(
            np.roll(tf0.intensity, m), tf1.intensity, rtol=1e-9, atol=1e-20
        )

    def test_cubic_negation_time_reverses(self):
        amp = gaussian_amplitude(GRID_I, 57.5)
        plus = synthesize_temporal(poly_field(GRID_I, 57.5, b=3e5), 50.0).intensity
        minus = synthesize_temporal(poly_field(GRID_I, 57.5, b=-3e5), 50.0).intensity
        reflected = np.roll(minus[::-1], 1)
        np.testing.assert_allclose(plus, reflected, rtol=1e-9, atol=1e-18)

    def test_parseval(self):
        for a, b in ((0.0, 0.0), (2e4, 0.0), (5e3, 2e5), (-1e4, -4e5)):
            f = poly_field(GRID_I, 57.5, a=a, b=b)
            nu, spectrum = uniform_complex_spectrum(f)
            d_nu = nu[1] - nu[0]
            spectrum = spectrum * math.sqrt(
                42.0 / (np.sum(np.abs(spectrum) ** 2) * d_nu)
            )
            tf = synthesize_temporal(f, 42.0)
            spectral = float(np.sum(np.abs(spectrum) ** 2) * d_nu)
            assert abs(spectral - tf.energy_uJ) / spectral < 1e-9

    def test_zero_amplitude_rejected(self):
        with pytest.raises(DegenerateSpectrumError):
            SpectralField(np.zeros(640), PhaseMask.zero(GRID_I), GRID_I)


class TestPeakIntensity:
    def test_system_i_defaults_within_estimated_range(self):
        tf = synthesize_temporal(flat_field(GRID_I, 57.5), 375.0)
        assert 930.0 <= peak_intensity(tf, 20.0) <= 1270.0

    def test_system_ii_defaults_within_estimated_range(self):
        tf = synthesize_temporal(flat_field(GRID_II, 51.5), 355.0)
        assert 670.0 <= peak_intensity(tf, 22.5) <= 960.0

    def test_chirp_lowers_peak(self):
        flat = synthesize_temporal(flat_field(GRID_I, 57.5), 375.0)
        chirped = synthesize_temporal(poly_field(GRID_I, 57.5, a=2e4), 375.0)
        assert peak_intensity(chirped, 20.0) < peak_intensity(flat, 20.0)

    def test_bad_spot_rejected(self):
        tf = synthesize_temporal(flat_field(GRID_I, 57.5), 10.0)
        with pytest.raises(ValueError):
            peak_intensity(tf, 0.0)


class TestTwoPhotonSignal:
    def test_flat_beats_chirp(self):
        flat = tpa_signal(synthesize_temporal(flat_field(GRID_I, 57.5), 100.0))
        chirped = tpa_signal(synthesize_temporal(poly_field(GRID_I, 57.5, a=5e3), 100.0))
        assert flat > chirped

    def test_constant_offset_invariant(self):
        base = poly_field(GRID_I, 57.5, a=1e3)
        shifted_phase = PhaseMask(base.phase.values + 0.5, GRID_I.tag)
        shifted = SpectralField(base.amplitude, shifted_phase, GRID_I)
        t1 = tpa_signal(synthesize_temporal(base, 100.0))
        t2 = tpa_signal(synthesize_temporal(shifted, 100.0))
        assert t1 == pytest.approx(t2, rel=1e-12)

    def test_random_cubic_always_below_flat(self):
        # Monte-Carlo oracle: any nonzero cubic phase loses to flat.
        rng = np.random.default_rng(7)
        flat = tpa_signal(synthesize_temporal(flat_field(GRID_I, 57.5), 100.0))
        for _ in range(100):
            b = rng.uniform(2e4, 4e5) * rng.choice((-1.0, 1.0))
            val = tpa_signal(synthesize_temporal(poly_field(GRID_I, 57.5, b=b), 100.0))
            assert val < flat

    def test_flat_phase_supremacy_random_masks(self):
        # 100 random per-pixel masks, none reaches the flat-phase signal.
        rng = np.random.default_rng(11)
        amp = gaussian_amplitude(GRID_I, 57.5)
        flat = tpa_signal(synthesize_temporal(flat_field(GRID_I, 57.5), 100.0))
        for _ in range(100):
            phase = rng.uniform(0, 2 * math.pi, size=640)
            f = SpectralField(amp, PhaseMask(phase, GRID_I.tag), GRID_I)
            val = tpa_signal(synthesize_temporal(f, 100.0))
            assert val <= flat * (1 + 1e-9)
