#!/usr/bin/env python3
"""Calibrate the substrate registry and freeze it to substrates.json.

One-shot producer of the shipped registry: anchors the CH2BrCl channel
constants against the headline yields (TL ratio 0.15, optimized ratio
~1.1 on the second system, system-I landscape roughly twice as high),
lays out the nine-compound family ladder, tunes the one fragile compound
(CHBr3) whose threshold artifact the yield matrix must reproduce, and
verifies the family trends before writing the file.

Run from the repository root:

    python scripts/calibrate_registry.py [--out src/pulselab/data/substrates.json]

The script is deterministic; re-running reproduces the shipped file.
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pulselab import fragmentation as frag
from pulselab import campaigns, ga, lab, pulses

# ---------------------------------------------------------------------------
# Family layout (Table-4 ordering: increasing halogen-ion/methyl-halide ratio)
# ---------------------------------------------------------------------------

FAMILY = [
    # name, s1 label, s2 label, s1 mass, s2 mass, parent mass
    ("CH2Cl2", "Cl+", "CH2Cl+", 35.0, 49.0, 84.0),
    ("CHCl3", "Cl+", "CHCl2+", 35.0, 83.0, 118.0),
    ("CHCl2Br", "Cl+", "CHCl2+", 35.0, 83.0, 162.0),
    ("CHClBr2", "Cl+", "CHBrCl+", 35.0, 127.0, 206.0),
    ("CHBr3", "Br+", "CHBr2+", 79.0, 171.0, 250.0),
    ("CH2Br2", "Br+", "CH2Br+", 79.0, 93.0, 172.0),
    ("CH2BrCl", "Cl+", "CH2Cl+", 35.0, 49.0, 128.0),
    ("CH2ICl", "Cl+", "CH2Cl+", 35.0, 49.0, 176.0),
    ("CH2IBr", "Br+", "CH2Br+", 79.0, 93.0, 220.0),
]

# Anchor compound (CH2BrCl, family slot 7) channel constants, frozen from the
# iterative calibration against the headline yields.
ANCHOR_SLOT = 7
PREFERRED_STRETCH_ANCHOR = 2200.0
LADDER_LN_STEP = 0.45
STRETCH_WIDTH_NARROW = 0.45
STRETCH_WIDTH_WIDE = 1.0
ION_SCALE_ANCHOR = 9.0
FLOOR_LONG = 0.75
SEQ_PREFERRED = 0.12
SEQ_WINDOW = 0.11
SEQ_WEIGHT = 0.5
COULOMB_THRESHOLD = 60.0
COULOMB_FRACTION_TL = 0.55
CHARGE_THRESHOLDS = (80.0, 300.0, 650.0)
S2_TL_UNITS = 100.0
S2_THRESHOLD_FRACTION = 0.02

# Transform-limited yield ladder on system I (family trend (i) at TL) and
# the optimized-yield ladder that g_lo is solved against.
J_TL_LADDER = [0.030, 0.045, 0.065, 0.090, 0.115, 0.130, 0.150, 0.185, 0.230]
J_OPT_LADDER = [1.8, 2.7, 4.0, 5.5, 8.8, 9.5, 12.5, 15.5, 19.0]

# CHBr3 (slot 5): true stretch preference is anomalously long; an
# intensity-band depletion of both product ions plus a high absolute S2
# threshold caps its direct optimization on system I.
CHBR3_TRUE_STRETCH = 1400.0
CHBR3_WIDTH = 0.5
CHBR3_DEPLETION_CENTER = 23.0
CHBR3_DEPLETION_WIDTH = 0.12
CHBR3_DEPLETION_S1 = 0.97
CHBR3_DEPLETION_S2 = 0.80
CHBR3_THRESHOLD = 25.0


def ideal_system(make_spec):
    spec = replace(make_spec(), residual_magnitude=(0.0, 0.0, 0.0))
    system = lab.make_laser_system(spec)
    system.tl_reference = pulses.PhaseMask.zero(spec.grid)
    return system


def tl_moments(system):
    field = lab.tl_field(system)
    peak = lab.effective_peak_intensity(system, field)
    intensity = field.intensity * (peak / field.intensity.max())
    dt = field.dt
    w1 = float(np.sum(intensity**3 / (1 + (intensity / frag.SAT_INTENSITY_S1) ** 2)) * dt)
    w2 = float(np.sum(intensity**6 / (1 + (intensity / frag.SAT_INTENSITY_S2) ** 5)) * dt)
    return {"peak": peak, "w1": w1, "w2": w2, "fluence": float(np.sum(intensity) * dt)}


def base_entry(slot, g_lo, k1, k2, gain):
    name, s1l, s2l, m1, m2, mp = FAMILY[slot - 1]
    sigma_p = PREFERRED_STRETCH_ANCHOR * np.exp(LADDER_LN_STEP * (slot - ANCHOR_SLOT))
    width = STRETCH_WIDTH_WIDE if slot in (7, 8, 9) else STRETCH_WIDTH_NARROW
    entry = frag.SubstrateSpec(
        name=name,
        family_index=slot,
        s1_label=s1l,
        s2_label=s2l,
        s1_mass_amu=m1,
        s2_mass_amu=m2,
        parent_mass_amu=mp,
        n_ion=6,
        n_diss=3,
        sequencing_weight=SEQ_WEIGHT,
        preferred_sequencing=SEQ_PREFERRED,
        sequencing_window=SEQ_WINDOW,
        preferred_stretch_fs=float(sigma_p),
        stretch_ln_width=width,
        resonance_floor_short=g_lo,
        resonance_floor_long=FLOOR_LONG,
        ionization_scale_TWcm2=ION_SCALE_ANCHOR * PREFERRED_STRETCH_ANCHOR / float(sigma_p),
        coulomb_threshold_TWcm2=COULOMB_THRESHOLD,
        coulomb_gain=gain,
        charge_state_thresholds=CHARGE_THRESHOLDS,
        k1=k1,
        k2=k2,
        s2_threshold=S2_THRESHOLD_FRACTION * S2_TL_UNITS,
    )
    if slot == 5:
        entry = replace(
            entry,
            preferred_stretch_fs=CHBR3_TRUE_STRETCH,
            stretch_ln_width=CHBR3_WIDTH,
            ionization_scale_TWcm2=ION_SCALE_ANCHOR
            * PREFERRED_STRETCH_ANCHOR
            / (PREFERRED_STRETCH_ANCHOR * np.exp(LADDER_LN_STEP * (5 - ANCHOR_SLOT))),
            depletion_amp_s1=CHBR3_DEPLETION_S1,
            depletion_amp_s2=CHBR3_DEPLETION_S2,
            depletion_center_TWcm2=CHBR3_DEPLETION_CENTER,
            depletion_ln_width=CHBR3_DEPLETION_WIDTH,
            s2_threshold=CHBR3_THRESHOLD,
        )
    return entry


def solve_levels(system_i, entry, j_tl_target, ref):
    """Fix k2 (TL S2 in standard units), then k1+gain for the TL yield split."""
    k2 = S2_TL_UNITS / ref["w2"]
    probe = replace(entry, k1=1.0, k2=k2, coulomb_gain=0.0)
    field = lab.tl_field(system_i)
    diss_unit = frag.ion_signals(probe, field, ref["peak"]).s1
    s1_target = j_tl_target * S2_TL_UNITS
    k1 = s1_target * (1.0 - COULOMB_FRACTION_TL) / diss_unit
    gain = s1_target * COULOMB_FRACTION_TL / (ref["fluence"] * 1e-6)
    return replace(entry, k1=k1, k2=k2, coulomb_gain=gain)


def train(system, entry, seed):
    mask, trace = campaigns.train_reagent(system, entry, ga.GAConfig(seed=seed))
    return mask, trace


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--out",
        default=str(Path(__file__).resolve().parent.parent / "src/pulselab/data/substrates.json"),
    )
    ap.add_argument("--skip-verify", action="store_true", help="freeze without the trend report")
    args = ap.parse_args(argv)

    t0 = time.time()
    sys_i = ideal_system(lab.system_i_spec)
    sys_ii = ideal_system(lab.system_ii_spec)
    ref = tl_moments(sys_i)
    print(f"system-I TL: peak {ref['peak']:.0f} TW/cm^2, fluence {ref['fluence']:.0f}")

    # Provisional g_lo from the anchor calibration, then one proportional
    # correction per compound against its optimized-yield target (the
    # diagonal yield scales as 1/g_lo once the TL split is held fixed).
    entries = {}
    bank = {}
    for slot in range(1, 10):
        g_lo = 0.062
        entry = solve_levels(sys_i, base_entry(slot, g_lo, 1.0, 1.0, 0.0), J_TL_LADDER[slot - 1], ref)
        mask, trace = train(sys_i, entry, seed=slot)
        j_tl = campaigns.tl_baseline(sys_i, entry, "ga")
        measured = trace.best_fitness / j_tl
        target = J_OPT_LADDER[slot - 1]
        g_lo = float(np.clip(g_lo * measured / target, 1e-4, 0.5))
        entry = solve_levels(sys_i, base_entry(slot, g_lo, 1.0, 1.0, 0.0), J_TL_LADDER[slot - 1], ref)
        mask, trace = train(sys_i, entry, seed=slot)
        j_diag = trace.best_fitness / campaigns.tl_baseline(sys_i, entry, "ga")
        entries[entry.name] = entry
        bank[entry.name] = mask
        print(
            f"slot {slot} {entry.name:8s}: sigma_p {entry.preferred_stretch_fs:6.0f} fs  "
            f"g_lo {g_lo:.4f}  J~diag(I) {j_diag:6.2f} (target {target})"
        )

    registry = entries
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    frag.save_registry(list(registry.values()), out)
    print(f"wrote {out} ({time.time() - t0:.0f}s)")

    if args.skip_verify:
        return 0

    # Verification: family matrices, trends, and the CHBr3 artifact.
    for system, source in ((sys_i, None), (sys_ii, sys_i)):
        matrix = campaigns.family_matrix(system, bank, registry, "report", source=source)
        excl = campaigns.CHBR3_ANOMALY_CELLS if system is sys_ii else ()
        trends = campaigns.trend_checks(matrix, excl)
        name = system.spec.name
        print(f"-- system {name}: spearman {trends.diagonal_spearman:.3f} "
              f"row fractions {[round(f, 2) for f in trends.row_fractions]}")
        diag = np.diag(matrix.j_tilde)
        print(f"   diagonal: {[round(float(d), 2) for d in diag]}")
        col = matrix.j_tilde[:, 4]
        exceed = [matrix.reagent_names[r] for r in range(9) if r != 4 and col[r] > diag[4]]
        print(f"   CHBr3 column exceeds diagonal: {exceed}")
        fired = [(matrix.reagent_names[r], matrix.substrate_names[c])
                 for r in range(9) for c in range(9) if matrix.thresholded[r, c]]
        print(f"   thresholded cells: {fired}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
