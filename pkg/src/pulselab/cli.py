"""Command-line front end.

Subcommands: ``calibrate`` (TL reference per system), ``spectrum``
(synthetic TOF CSV), ``scan`` (landscape CSV + features), ``optimize``
(GA run, mask file + trace CSV), ``transfer`` (efficacy report),
``matrix`` (yield matrix CSV + trend report), ``demo`` (end-to-end
acceptance reproduction).  Every run writes a manifest recording the
config digest, seeds, and artifact paths, from which it can be
regenerated byte-identically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, campaigns
from .config import ConfigError, RunConfig, load_config
from .fragmentation import spectrum_csv_rows, synth_tof_spectrum, ion_signals
from .ga import GAConfig, trace_csv_rows
from .lab import (
    LaserSystem,
    TransferPolicy,
    calibrate_tl,
    effective_peak_intensity,
    make_laser_system,
    shape_pulse,
    tl_field,
)
from .pulses import PhaseMask
from dataclasses import replace


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_mask(path: Path, mask: PhaseMask) -> None:
    """Mask file: header naming the grid tag, then one radian value per line."""
    with open(path, "w") as fh:
        fh.write(f"# grid {mask.grid_tag}\n")
        for v in mask.values:
            fh.write(f"{v:.17g}\n")


def read_mask(path: Path) -> PhaseMask:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# grid "):
        raise ValueError(f"{path} is not a mask file (missing grid header)")
    tag = lines[0][len("# grid "):].strip()
    return PhaseMask(np.array([float(x) for x in lines[1:] if x.strip()]), tag)


def _digest_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: RunConfig, seeds: dict, artifacts: list[Path], t0: float) -> Path:
    manifest = {
        "tool": "pulselab",
        "version": __version__,
        "command": command,
        "config_digest": cfg.digest,
        "seeds": seeds,
        "artifacts": {p.name: _digest_file(p) for p in artifacts},
        "wall_clock_s": round(time.time() - t0, 3),
    }
    path = out / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _build_system(cfg: RunConfig, name: str, seed: int | None) -> LaserSystem:
    if name not in cfg.systems:
        raise ConfigError(f"config has no [system.{name}] section")
    system = make_laser_system(cfg.systems[name])
    calibrate_tl(system, seed=0 if seed is None else seed)
    return system


def _substrate(cfg: RunConfig, name: str):
    if name not in cfg.registry:
        raise ConfigError(f"unknown substrate {name!r}; registry has {sorted(cfg.registry)}")
    return cfg.registry[name]


def cmd_calibrate(args, cfg: RunConfig, out: Path, t0: float) -> int:
    system = make_laser_system(cfg.systems[args.system])
    reference = calibrate_tl(system, seed=args.seed)
    path = out / f"tl_reference_{args.system}.mask"
    write_mask(path, reference)
    field = tl_field(system)
    print(f"system {args.system}: TL reference written to {path}")
    print(f"peak intensity (scaled): {effective_peak_intensity(system, field):.1f} TW/cm^2")
    write_manifest(out, "calibrate", cfg, {"seed": args.seed}, [path], t0)
    return 0


def cmd_spectrum(args, cfg: RunConfig, out: Path, t0: float) -> int:
    system = _build_system(cfg, args.system, args.seed)
    sub = _substrate(cfg, args.substrate)
    mask = read_mask(args.mask) if args.mask else PhaseMask.zero(system.grid)
    field = shape_pulse(system, mask)
    peak = effective_peak_intensity(system, field)
    spec = synth_tof_spectrum(sub, field, peak)
    path = out / f"spectrum_{args.system}_{args.substrate}.csv"
    write_csv(path, ["ion", "q", "flight_time_us", "amplitude", "doublet_split_us"],
              spectrum_csv_rows(spec))
    print(f"wrote {path} ({len(spec)} peaks, peak intensity {peak:.0f} TW/cm^2)")
    write_manifest(out, "spectrum", cfg, {"seed": args.seed}, [path], t0)
    return 0


def cmd_scan(args, cfg: RunConfig, out: Path, t0: float) -> int:
    system = _build_system(cfg, args.system, args.seed)
    sub = _substrate(cfg, args.substrate)
    result = campaigns.scan_landscape(
        system, sub, cfg.scan_a_range, cfg.scan_b_range, cfg.scan_n[0], cfg.scan_n[1]
    )
    path = out / f"landscape_{args.system}_{args.substrate}.csv"
    write_csv(path, ["A_fs2", "B_fs3", "J"], campaigns.landscape_csv_rows(result))
    if result.j_grid.size > 1 and result.j_grid.max() > result.j_grid.min():
        feats = campaigns.landscape_features(result)
        print(f"origin_is_near_min: {feats.origin_is_near_min}")
        print(f"superlevel_components: {feats.n_components}")
        print(f"global_max_quadrant: {feats.global_max_quadrant}")
        print(f"asymmetry_score: {feats.asymmetry_score:.4f}")
    print(f"wrote {path}")
    write_manifest(out, "scan", cfg, {"seed": args.seed}, [path], t0)
    return 0


def cmd_optimize(args, cfg: RunConfig, out: Path, t0: float) -> int:
    system = _build_system(cfg, args.system, None)
    sub = _substrate(cfg, args.substrate)
    ga_cfg = replace(cfg.ga, seed=args.seed)
    mask, trace = campaigns.train_reagent(system, sub, ga_cfg)
    mask_path = out / f"reagent_{args.system}_{args.substrate}_seed{args.seed}.mask"
    write_mask(mask_path, mask)
    trace_path = out / f"trace_{args.system}_{args.substrate}_seed{args.seed}.csv"
    write_csv(trace_path, ["generation", "best", "mean", "std"], trace_csv_rows(trace))
    j_tl = campaigns.tl_baseline(system, sub)
    print(f"best J: {trace.best_fitness:.4f}  (J_tilde {trace.best_fitness / j_tl:.2f})")
    print(f"wrote {mask_path} and {trace_path}")
    write_manifest(out, "optimize", cfg, {"seed": args.seed}, [mask_path, trace_path], t0)
    return 0


def cmd_transfer(args, cfg: RunConfig, out: Path, t0: float) -> int:
    source = _build_system(cfg, args.source, None)
    target = _build_system(cfg, args.system, None)
    sub = _substrate(cfg, args.substrate)
    policy = {"copy": TransferPolicy.COPY,
              "shift": None,
              "resample": TransferPolicy(resample=True)}[args.policy]
    seeds_src = [args.seed + i for i in range(args.reagents)]
    seeds_tgt = [args.seed + 100 + i for i in range(args.reagents)]
    ga_cfg = cfg.ga
    src_masks = [campaigns.train_reagent(source, sub, replace(ga_cfg, seed=s))[0] for s in seeds_src]
    tgt_masks = [campaigns.train_reagent(target, sub, replace(ga_cfg, seed=s))[0] for s in seeds_tgt]
    if args.policy == "shift":
        from .lab import compute_pixel_shift

        policy = TransferPolicy(shift_pixels=compute_pixel_shift(source.spec, target.spec))
    report = campaigns.transfer_efficacy(src_masks, tgt_masks, source, target, sub, policy=policy)
    path = out / f"transfer_{args.source}_to_{args.system}_{args.substrate}.csv"
    rows = [("transferred", i, r.j_tilde_mean, r.j_tilde_std, r.efficacy)
            for i, r in enumerate(report.transferred)]
    rows += [("native", i, r.j_tilde_mean, r.j_tilde_std, r.efficacy)
             for i, r in enumerate(report.native)]
    write_csv(path, ["kind", "index", "j_tilde_mean", "j_tilde_std", "efficacy"], rows)
    shift_report = campaigns.shift_study(src_masks, source, target, sub)
    print(f"pixel shift from grid arithmetic: {shift_report.grid_shift_pixels}")
    print("(the lab notebook shift for these center wavelengths was 362-320 = 42)")
    for r in report.transferred:
        print(f"transferred reagent: J_tilde {r.j_tilde_mean:.2f} efficacy {r.efficacy:.3f}")
    print(f"max shift-study gain: {shift_report.max_gain:+.3f}")
    print(f"wrote {path}")
    write_manifest(out, "transfer", cfg, {"seed": args.seed}, [path], t0)
    return 0


def cmd_matrix(args, cfg: RunConfig, out: Path, t0: float) -> int:
    target = _build_system(cfg, args.system, None)
    train_on = args.train_on or args.system
    source = target if train_on == args.system else _build_system(cfg, train_on, None)
    names = sorted(cfg.registry, key=lambda n: cfg.registry[n].family_index)
    bank = {}
    for i, name in enumerate(names, start=1):
        bank[name], _ = campaigns.train_reagent(
            source, cfg.registry[name], replace(cfg.ga, seed=args.seed + i)
        )
    matrix = campaigns.family_matrix(
        target, bank, cfg.registry, args.mode,
        source=None if source is target else source,
    )
    path = out / f"matrix_{args.system}.csv"
    write_csv(path, ["reagent", "substrate", "J_tilde", "thresholded"],
              campaigns.matrix_csv_rows(matrix))
    excl = campaigns.CHBR3_ANOMALY_CELLS if (args.system == "II" and source is not target) else ()
    trends = campaigns.trend_checks(matrix, excl)
    print(f"diagonal spearman: {trends.diagonal_spearman:.3f} "
          f"({'pass' if trends.diagonal_trend_pass else 'FAIL'} at >= {trends.SPEARMAN_BAR})")
    print(f"row fractions: {[round(f, 3) for f in trends.row_fractions]} "
          f"({'pass' if trends.row_trend_pass else 'FAIL'} at >= {trends.ROW_FRACTION_BAR})")
    print(f"wrote {path} ({matrix.j_tilde.size} cells)")
    write_manifest(out, "matrix", cfg, {"seed": args.seed}, [path], t0)
    return 0


def cmd_demo(args, cfg: RunConfig, out: Path, t0: float) -> int:
    from .acceptance import run_acceptance

    results = run_acceptance(fast=args.fast)
    path = out / "acceptance_report.txt"
    with open(path, "w") as fh:
        for r in results:
            line = f"[{'PASS' if r.passed else 'FAIL'}] {r.criterion}: {r.detail}"
            print(line)
            fh.write(line + "\n")
    write_manifest(out, "demo", cfg, {}, [path], t0)
    if not all(r.passed for r in results):
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pulselab",
        description="Virtual pulse-shaping lab: calibration, optimization, scans, transfer studies.",
    )
    parser.add_argument("--config", default=None, help="config file (default: packaged defaults)")
    parser.add_argument("--out", default=".", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="find the TL reference for one system")
    p.add_argument("--system", default="I")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("spectrum", help="synthetic TOF spectrum CSV")
    p.add_argument("--system", default="I")
    p.add_argument("--substrate", default="CH2BrCl")
    p.add_argument("--mask", default=None, help="mask file (default: TL pulse)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("scan", help="2-D (A,B) landscape scan")
    p.add_argument("--system", default="I")
    p.add_argument("--substrate", default="CH2BrCl")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("optimize", help="GA optimization of the ratio objective")
    p.add_argument("--system", default="I")
    p.add_argument("--substrate", default="CH2BrCl")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("transfer", help="reagent transfer efficacy study")
    p.add_argument("--source", default="I")
    p.add_argument("--system", default="II", help="target system")
    p.add_argument("--substrate", default="CH2BrCl")
    p.add_argument("--policy", choices=("copy", "shift", "resample"), default="copy")
    p.add_argument("--reagents", type=int, default=4)
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("matrix", help="9x9 reagent-substrate yield matrix")
    p.add_argument("--system", default="I")
    p.add_argument("--train-on", default=None, help="system the bank is trained on")
    p.add_argument("--mode", choices=("ga", "report"), default="report")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("demo", help="end-to-end acceptance reproduction")
    p.add_argument("--fast", action="store_true", help="reduced budgets (spot checks)")
    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    t0 = time.time()
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    handler = {
        "calibrate": cmd_calibrate,
        "spectrum": cmd_spectrum,
        "scan": cmd_scan,
        "optimize": cmd_optimize,
        "transfer": cmd_transfer,
        "matrix": cmd_matrix,
        "demo": cmd_demo,
    }[args.command]
    try:
        return handler(args, cfg, out, t0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
