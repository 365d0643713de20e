#!/usr/bin/env python3
"""Throughput vs. feedback threshold for one (speed, flows) scenario.

Sweeps the DRF trigger threshold over {15%, 25%, 35%, 50%, 65%, 75%} with
5 replications per point and writes summary.csv plus a per-threshold mean
table to stdout.
"""

import argparse
import statistics
from collections import defaultdict

from drfsim.config import ScenarioConfig
from drfsim.sweep import SweepSpec, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--speed", type=float, default=20.0, help="node speed m/s")
    ap.add_argument("--flows", type=int, default=5)
    ap.add_argument("--duration", type=float, default=100.0)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--replications", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/threshold_sweep")
    args = ap.parse_args()

    base = ScenarioConfig(protocol="drf", speed=args.speed, flows=args.flows,
                          duration_s=args.duration, seed=args.seed).validate()
    spec = SweepSpec(base=base, axis="thresholds",
                     replications=args.replications)
    rows = run_sweep(spec, args.out, jobs=args.jobs)

    by_thr = defaultdict(list)
    for row in rows:
        by_thr[row["threshold_pct"]].append(row["throughput_pps"])
    print(f"speed {args.speed} m/s, {args.flows} flows, "
          f"{args.replications} seeds")
    print("threshold%  mean_tput_pps  stdev")
    for thr in sorted(by_thr):
        vals = by_thr[thr]
        sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
        print(f"{thr:>9}  {statistics.mean(vals):13.2f}  {sd:6.2f}")
    print(f"rows written to {args.out}/summary.csv")


if __name__ == "__main__":
    main()
