"""Command-line front-end.

Subcommands::

    dmm run <config> [--out DIR] [--set key=value ...]
    dmm reproduce-fig1 [--out DIR]
    dmm check-bounds <thm1|thm2|thm3> [--T n] [--tau-max m] [--seed s] [--out DIR]
    dmm sweep <config> --axis <T|tau_max|alpha> --values a,b,c [--seeds n] [--out DIR]

Exit codes: 0 on success, 1 on a configuration error, 2 when a bound check
fails.  The DMM_OUT_DIR environment variable overrides the output directory.
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .harness import ConfigError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmm",
        description="Delayed min-max optimization runs and bound checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key")

    p_fig = sub.add_parser("reproduce-fig1",
                           help="delayed vs undelayed extra-gradient demo")
    p_fig.add_argument("--out", default=None)

    p_chk = sub.add_parser("check-bounds", help="run a canned bound suite")
    p_chk.add_argument("rule", choices=["thm1", "thm2", "thm3"])
    p_chk.add_argument("--T", type=int, default=None)
    p_chk.add_argument("--tau-max", type=int, default=None)
    p_chk.add_argument("--seed", type=int, default=0)
    p_chk.add_argument("--out", default=None)

    p_swp = sub.add_parser("sweep", help="one run per value along an axis")
    p_swp.add_argument("config")
    p_swp.add_argument("--axis", required=True, choices=list(harness.SWEEP_AXES))
    p_swp.add_argument("--values", required=True)
    p_swp.add_argument("--seeds", type=int, default=1)
    p_swp.add_argument("--out", default=None)
    return parser


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs:
        key, eq, value = pair.partition("=")
        if not eq:
            raise ConfigError(key or pair, "--set expects KEY=VALUE")
        overrides[key.strip()] = value.strip()
    return overrides


def _report_exit(records) -> int:
    failed = False
    for rec in records:
        for report in rec.bound_reports:
            print(report.summary())
            failed = failed or not report.satisfied
    return 2 if failed else 0


def _cmd_run(args) -> int:
    config = harness.parse_config(args.config, overrides=_parse_overrides(args.set))
    out = harness.resolve_out_dir(args.out, config.out_dir)
    record = harness.run(config)
    paths = harness.write_run_outputs(record, out)
    print(f"{record.config['name']}: status={record.status} "
          f"T={record.config['T']} alpha={record.config['alpha']:.6g} "
          f"final_gap={record.final_gap}")
    print("wrote " + ", ".join(paths))
    return _report_exit([record])


def _cmd_fig1(args) -> int:
    out = harness.resolve_out_dir(args.out)
    delayed, nodelay, _ = harness.reproduce_fig1(out_dir=out)
    print(f"delayed run:   status={delayed.status}, "
          f"final r={delayed.rows[-1][delayed.columns.index('r')]:.3e}")
    print(f"no-delay run:  status={nodelay.status}, "
          f"final r={nodelay.rows[-1][nodelay.columns.index('r')]:.3e}")
    print(f"outputs in {out}")
    return 0


def _cmd_check_bounds(args) -> int:
    config = harness.canned_config(args.rule, T=args.T, tau_max=args.tau_max,
                                   seed=args.seed)
    out = harness.resolve_out_dir(args.out)
    record = harness.run(config)
    harness.write_run_outputs(record, out)
    print(f"{config.name}: {config.problem}, {config.algorithm}, "
          f"T={config.T}, schedule={config.schedule}, seed={config.seed}")
    return _report_exit([record])


def _cmd_sweep(args) -> int:
    import os

    config = harness.parse_config(args.config)
    out = harness.resolve_out_dir(args.out, config.out_dir)
    values_raw = [v for v in args.values.split(",") if v]
    cast = float if args.axis == "alpha" else int
    try:
        values = [cast(v) for v in values_raw]
    except ValueError:
        raise ConfigError("values", f"expected {cast.__name__}s, "
                          f"got {args.values!r}") from None
    table = harness.sweep(config, args.axis, values, seeds_per_cell=args.seeds)
    path = os.path.join(out, f"{config.name}_sweep.csv")
    harness.emit_sweep_csv(table, path)
    for row in table:
        print(f"{args.axis}={row['value']}: status={row['status']} "
              f"gap_mean={row['gap_mean']} bound={row['theoretical_bound']}")
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "reproduce-fig1":
            return _cmd_fig1(args)
        if args.command == "check-bounds":
            return _cmd_check_bounds(args)
        return _cmd_sweep(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
