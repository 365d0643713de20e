"""Command-line entry point: run / sweep / paper-suite subcommands."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import ConfigError, ScenarioConfig, load_config
from .metrics import write_summary_csv
from .scenario import ScenarioError, run_scenario
from .sweep import AXES, SweepError, SweepSpec, run_paper_suite, run_sweep


def _load(path: str | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig().validate()
    return load_config(path)


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "duration", None) is not None:
        cfg.duration_s = args.duration
    return cfg.validate()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="drfsim",
        description="Rate-based transport over mobile ad hoc networks: "
                    "deterministic simulator and experiment harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--config", help="scenario config file (INI key=value)")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.add_argument("--traces", action="store_true",
                       help="dump event/mobility/energy/rate trace CSVs")

    p_sweep = sub.add_parser("sweep", help="sweep one axis with replications")
    p_sweep.add_argument("--config")
    p_sweep.add_argument("--axis", required=True, choices=sorted(AXES))
    p_sweep.add_argument("--replications", type=int, default=5)
    p_sweep.add_argument("--out", default=".")
    p_sweep.add_argument("--jobs", type=int, default=1)

    p_suite = sub.add_parser("paper-suite",
                             help="full threshold/mobility/energy trend battery")
    p_suite.add_argument("--config")
    p_suite.add_argument("--seed", type=int)
    p_suite.add_argument("--duration", type=float,
                         help="override run duration in seconds")
    p_suite.add_argument("--replications", type=int, default=5)
    p_suite.add_argument("--out", required=True)
    p_suite.add_argument("--jobs", type=int, default=1)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _apply_overrides(_load(args.config), args)
            row = run_scenario(cfg, out_dir=args.out, traces=args.traces)
            import os
            os.makedirs(args.out, exist_ok=True)
            write_summary_csv([row], os.path.join(args.out, "summary.csv"))
            print(f"throughput {row['throughput_pps']:.1f} pps, "
                  f"{row['acks_sent']} ACK+Rate packets, "
                  f"{row['total_energy_j']:.3f} J")
        elif args.command == "sweep":
            base = _load(args.config)
            spec = SweepSpec(base=base, axis=args.axis,
                             replications=args.replications)
            rows = run_sweep(spec, args.out, jobs=args.jobs)
            print(f"wrote {len(rows)} rows to {args.out}/summary.csv")
        elif args.command == "paper-suite":
            cfg = _apply_overrides(_load(args.config), args)
            results = run_paper_suite(cfg, args.out,
                                      replications=args.replications,
                                      jobs=args.jobs)
            total = sum(len(rows) for rows in results.values())
            print(f"wrote {total} rows under {args.out}")
    except (ConfigError, ScenarioError, SweepError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
