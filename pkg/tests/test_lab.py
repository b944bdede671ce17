"""Virtual laser systems: residual phase, calibration, mask transfer."""

from dataclasses import replace

import numpy as np
import pytest

from pulselab.lab import (
    LaserSystemSpec,
    TransferPolicy,
    TransferRangeError,
    UncalibratedSystemError,
    compute_pixel_shift,
    effective_peak_intensity,
    make_laser_system,
    shape_pulse,
    system_i_spec,
    system_ii_spec,
    tl_field,
    transfer_mask,
)
from pulselab.pulses import PhaseMask, tpa_signal


def ideal(spec_fn, **kw):
    """Zero-residual, flat-reference system (no GA needed)."""
    spec = replace(spec_fn(**kw), residual_magnitude=(0.0, 0.0, 0.0))
    system = make_laser_system(spec)
    system.tl_reference = PhaseMask.zero(spec.grid)
    return system


class TestMakeLaserSystem:
    def test_deterministic_residual(self):
        s1 = make_laser_system(system_i_spec(seed=42))
        s2 = make_laser_system(system_i_spec(seed=42))
        assert np.array_equal(s1.residual_phase.values, s2.residual_phase.values)

    def test_zero_magnitude_zero_residual(self):
        spec = replace(system_i_spec(), residual_magnitude=(0.0, 0.0, 0.0))
        system = make_laser_system(spec)
        assert np.all(system.residual_phase.values == 0.0)

    def test_different_seeds_differ_almost_everywhere(self):
        a = make_laser_system(system_i_spec(seed=1)).residual_phase.values
        b = make_laser_system(system_i_spec(seed=2)).residual_phase.values
        assert np.mean(a != b) > 0.9

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            system_i_spec(intensity_scale=0.0)
        with pytest.raises(ValueError):
            replace(system_i_spec(), delivered_energy_uJ=-1.0)


class TestShapePulse:
    def test_uncalibrated_raises(self):
        system = make_laser_system(system_i_spec())
        with pytest.raises(UncalibratedSystemError):
            shape_pulse(system, PhaseMask.zero(system.grid))

    def test_bypass_allows_uncalibrated(self):
        system = make_laser_system(system_i_spec())
        field = shape_pulse(system, PhaseMask.zero(system.grid), bypass_reference=True)
        assert field.energy_uJ == pytest.approx(375.0, rel=1e-12)

    def test_wrong_grid_mask_rejected(self):
        sys_i = ideal(system_i_spec)
        sys_ii = ideal(system_ii_spec)
        from pulselab.pulses import IncompatibleMaskError

        with pytest.raises(IncompatibleMaskError):
            shape_pulse(sys_i, PhaseMask.zero(sys_ii.grid))

    def test_second_system_at_most_half_peak_intensity(self):
        sys_i = ideal(system_i_spec)
        sys_ii = ideal(system_ii_spec)
        p_i = effective_peak_intensity(sys_i, tl_field(sys_i))
        p_ii = effective_peak_intensity(sys_ii, tl_field(sys_ii))
        assert p_ii <= 0.5 * p_i

    def test_composition_consistency(self):
        # Applying mask m on a system with reference r equals applying
        # (r + m) with the reference bypassed.
        from pulselab.pulses import compose_masks, eval_polynomial_phase, PolynomialPhase

        system = make_laser_system(system_i_spec())
        ref = eval_polynomial_phase(
            PolynomialPhase(0.0, -1.2e4, 3e4, system.grid.center_omega), system.grid
        )
        system.tl_reference = ref
        m = eval_polynomial_phase(
            PolynomialPhase(4e3, 2e4, 0.0, system.grid.center_omega), system.grid
        )
        direct = shape_pulse(system, m)
        combined = shape_pulse(system, compose_masks(ref, m), bypass_reference=True)
        np.testing.assert_allclose(
            direct.intensity, combined.intensity, rtol=1e-9, atol=1e-9 * direct.intensity.max()
        )


class TestComputePixelShift:
    def test_identical_specs_zero(self):
        assert compute_pixel_shift(system_i_spec(), system_i_spec()) == 0

    def test_default_systems_grid_arithmetic(self):
        # round((800 - 791) / 0.179) = 50 pixels toward the red side.
        assert compute_pixel_shift(system_i_spec(), system_ii_spec()) == 50

    def test_out_of_range(self):
        near_ir = replace(
            system_i_spec(), grid=replace(system_i_spec().grid, center_wavelength_nm=1400.0)
        )
        with pytest.raises(TransferRangeError):
            compute_pixel_shift(near_ir, system_ii_spec())


class TestTransferMask:
    def setup_method(self):
        self.sys_i = ideal(system_i_spec)
        self.sys_ii = ideal(system_ii_spec)
        rng = np.random.default_rng(0)
        self.mask = PhaseMask(rng.uniform(-3, 3, 640), self.sys_i.grid.tag)

    def test_identity_between_identical_systems(self):
        clone = ideal(system_i_spec)
        out = transfer_mask(self.mask, self.sys_i, clone, TransferPolicy.COPY)
        assert np.array_equal(out.values, self.mask.values)

    def test_copy_preserves_pixel_values(self):
        out = transfer_mask(self.mask, self.sys_i, self.sys_ii, TransferPolicy.COPY)
        assert np.array_equal(out.values, self.mask.values)
        assert out.grid_tag == self.sys_ii.grid.tag

    def test_shift_rolls_and_zero_fills(self):
        out = transfer_mask(
            self.mask, self.sys_i, self.sys_ii, TransferPolicy(shift_pixels=50)
        )
        assert np.array_equal(out.values[50:], self.mask.values[:-50])
        assert np.all(out.values[:50] == 0.0)

    def test_resample_identity_on_identical_grids(self):
        clone = ideal(system_i_spec)
        out = transfer_mask(self.mask, self.sys_i, clone, TransferPolicy(resample=True))
        np.testing.assert_allclose(out.values, self.mask.values, rtol=1e-12)

    def test_shift_resample_consistency_on_offset_grids(self):
        # Equal nm/pixel, center offset by an integer pixel count: the
        # resampled mask equals the rolled mask away from the fill region.
        spec_a = system_i_spec()
        grid_b = replace(spec_a.grid, center_wavelength_nm=800.0 + 12 * 0.155)
        spec_b = replace(spec_a, name="B", grid=grid_b)
        sys_b = ideal(lambda: spec_b)
        shift = compute_pixel_shift(spec_a, spec_b)
        assert shift == -12
        rolled = transfer_mask(self.mask, self.sys_i, sys_b, TransferPolicy(shift_pixels=shift))
        resampled = transfer_mask(self.mask, self.sys_i, sys_b, TransferPolicy(resample=True))
        np.testing.assert_allclose(
            resampled.values[: 640 - 12], rolled.values[: 640 - 12], rtol=1e-9, atol=1e-12
        )

    def test_invalid_policy(self):
        with pytest.raises(ValueError):
            transfer_mask(
                self.mask, self.sys_i, self.sys_ii, TransferPolicy(shift_pixels=640)
            )
        with pytest.raises(ValueError):
            TransferPolicy(shift_pixels=3, resample=True).validate(640)


@pytest.mark.slow
class TestCalibration:
    def test_calibration_reaches_analytic_optimum(self):
        from pulselab.lab import calibrate_tl

        system = make_laser_system(system_i_spec(seed=107))
        calibrate_tl(system, seed=0)
        ideal_tpa = tpa_signal(
            shape_pulse(
                system,
                PhaseMask(-system.residual_phase.values, system.grid.tag),
                bypass_reference=True,
            )
        )
        achieved = tpa_signal(tl_field(system))
        assert achieved / ideal_tpa >= 0.99

    def test_zero_residual_reference_near_flat(self):
        from pulselab.lab import calibrate_tl

        spec = replace(system_i_spec(), residual_magnitude=(0.0, 0.0, 0.0))
        system = make_laser_system(spec)
        calibrate_tl(system, seed=0)
        flat = tpa_signal(
            shape_pulse(system, PhaseMask.zero(system.grid), bypass_reference=True)
        )
        achieved = tpa_signal(tl_field(system))
        assert achieved / flat >= 0.999

    def test_two_seeds_agree_within_percent(self):
        from pulselab.lab import calibrate_tl

        vals = []
        for ga_seed in (0, 1):
            system = make_laser_system(system_ii_spec(seed=205))
            calibrate_tl(system, seed=ga_seed)
            vals.append(tpa_signal(tl_field(system)))
        assert abs(vals[0] - vals[1]) / max(vals) < 0.01
