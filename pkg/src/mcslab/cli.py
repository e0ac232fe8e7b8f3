"""Command-line front end.

Subcommands:

  degrade   synthesize degraded copies of PGM images plus a manifest
  sample    run a configured sampling experiment over a seed list
  stats     convergence statistics from a dumped trajectory CSV
  sweep     repeat an experiment across a boundary or weight-ratio grid

Exit codes: 0 success, 1 configuration/usage error, 2 numerical abort
(guidance diverged).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .degrade import ALLOWED_SCALES, DegradationSpec, sample_spec, synthesize_lq
from .fileio import read_pgm, write_manifest, write_pgm
from .guidance import NumericalAbort
from .harness import (
    ConfigError,
    format_report,
    load_experiment_config,
    load_trajectory,
    parse_condition,
    parse_seed_list,
    run_experiment,
    sweep,
    trajectory_stats,
    write_stats_csv,
)
from .rng import CounterRng

__all__ = ["main", "entry"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcslab",
        description="Measurement-constrained sampling laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    deg = sub.add_parser("degrade", help="synthesize degraded PGM images")
    deg.add_argument("--in", dest="inputs", required=True, help="PGM file or directory")
    deg.add_argument("--out", dest="out", required=True, help="output directory")
    deg.add_argument("--scale", type=int, required=True, choices=ALLOWED_SCALES)
    deg.add_argument("--seed", type=int, default=0)
    deg.add_argument(
        "--spec",
        default=None,
        help="fixed parameters 'sigma=...,delta=...,q=...' instead of sampling them",
    )

    smp = sub.add_parser("sample", help="run a sampling experiment")
    smp.add_argument("--config", required=True)
    smp.add_argument("--sampler", default=None, choices=("mcs", "dps", "ddnm", "unguided"))
    smp.add_argument("--condition", default=None, help="comma-separated labels, or 'null'")
    smp.add_argument("--seeds", default=None, help="a..b (inclusive) or comma list")
    smp.add_argument("--output", default=None, help="override the output directory")

    sta = sub.add_parser("stats", help="convergence statistics from a trajectory CSV")
    sta.add_argument("--traj", required=True)

    swp = sub.add_parser("sweep", help="grid sweep over one guidance knob")
    swp.add_argument("--config", required=True)
    swp.add_argument("--axis", required=True, choices=("boundary", "ratio"))
    swp.add_argument("--grid", required=True, help="comma-separated grid values")
    swp.add_argument("--seeds", default=None, help="a..b (inclusive) or comma list")
    swp.add_argument("--output", default=None, help="override the output directory")
    return parser


def _cmd_degrade(args) -> int:
    src = Path(args.inputs)
    if src.is_dir():
        files = sorted(src.glob("*.pgm"))
        if not files:
            raise ConfigError(f"no .pgm files in {src}")
    elif src.exists():
        files = [src]
    else:
        raise ConfigError(f"input {src} does not exist")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    fixed = None
    if args.spec is not None:
        fixed = {}
        for item in args.spec.split(","):
            if "=" not in item:
                raise ConfigError(f"malformed --spec entry {item!r}")
            key, val = item.split("=", 1)
            fixed[key.strip()] = val.strip()
        unknown = set(fixed) - {"sigma", "delta", "q"}
        if unknown:
            raise ConfigError(f"unknown --spec keys: {sorted(unknown)}")
        for key in ("sigma", "delta", "q"):
            if key not in fixed:
                raise ConfigError(f"--spec missing {key}")

    entries = []
    for idx, f in enumerate(files):
        gt = read_pgm(f)
        image_seed = args.seed ^ idx
        if fixed is None:
            spec = sample_spec(CounterRng(image_seed), args.scale)
        else:
            spec = DegradationSpec(
                sigma=float(fixed["sigma"]),
                s=args.scale,
                delta=float(fixed["delta"]),
                q=int(fixed["q"]),
                seed=image_seed,
            )
        try:
            lq = synthesize_lq(gt, spec)
        except ValueError as exc:
            raise ConfigError(f"{f.name}: {exc}") from exc
        write_pgm(out / f.name, lq)
        entries.append(
            {
                "filename": f.name,
                "sigma": spec.sigma,
                "s": spec.s,
                "delta": spec.delta,
                "q": spec.q,
                "seed": spec.seed,
            }
        )
    write_manifest(out / "manifest.txt", entries)
    print(f"degraded {len(entries)} image(s) into {out}")
    return 0


def _cmd_sample(args) -> int:
    cfg = load_experiment_config(args.config)
    overrides = {}
    if args.sampler is not None:
        overrides["sampler"] = args.sampler
    if args.condition is not None:
        overrides["condition"] = parse_condition(args.condition)
    if args.seeds is not None:
        overrides["seeds"] = parse_seed_list(args.seeds)
    if args.output is not None:
        overrides["output_dir"] = args.output
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    report = run_experiment(cfg)
    sys.stdout.write(format_report(report))
    return 0


def _cmd_stats(args) -> int:
    traj = load_trajectory(args.traj)
    rows = trajectory_stats(traj)
    out = Path(args.traj).with_name(Path(args.traj).stem + "_stats.csv")
    write_stats_csv(out, rows)
    print("t change_var pixel_var detail_energy loss")
    for r in rows:
        print(f"{r['t']} {r['change_var']!r} {r['pixel_var']!r} {r['detail_energy']!r} {r['loss']!r}")
    print(f"stats written to {out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_experiment_config(args.config)
    overrides = {}
    if args.seeds is not None:
        overrides["seeds"] = parse_seed_list(args.seeds)
    if args.output is not None:
        overrides["output_dir"] = args.output
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    grid = [v.strip() for v in args.grid.split(",") if v.strip()]
    rows = sweep(cfg, args.axis, grid)
    print("setting response_rate mean_residual mean_log_density")
    for r in rows:
        rate = "-" if r["response_rate"] is None else repr(r["response_rate"])
        print(f"{r['setting']} {rate} {r['mean_residual']!r} {r['mean_log_density']!r}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "degrade": _cmd_degrade,
        "sample": _cmd_sample,
        "stats": _cmd_stats,
        "sweep": _cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
