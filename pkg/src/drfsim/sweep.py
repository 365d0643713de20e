"""Experiment sweeps: axis enumeration, replication seeding, CSV emission.

Runs are fully isolated single-threaded instances, so a sweep may execute
them on a process pool; rows are always gathered and written in the
deterministic enumeration order.  ATP/DRF rows for the same scenario seed
share one mobility realization (verifiable via the mobility_hash column).
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .config import ScenarioConfig, save_config
from .metrics import write_summary_csv
from .scenario import run_scenario

THRESHOLDS = [0.15, 0.25, 0.35, 0.50, 0.65, 0.75]
SPEEDS = [1.0, 10.0, 20.0, 30.0, 50.0]
FLOWS = [1, 5, 25]
PROTOCOLS = ["atp", "drf"]

AXES = {
    "thresholds": THRESHOLDS,
    "speeds": SPEEDS,
    "flows": FLOWS,
    "protocol": PROTOCOLS,
}


class SweepError(Exception):
    pass


@dataclass
class SweepSpec:
    base: ScenarioConfig
    axis: str
    replications: int = 5

    def configs(self) -> List[ScenarioConfig]:
        if self.axis not in AXES:
            raise SweepError(f"unknown sweep axis {self.axis!r}")
        out = []
        for value in AXES[self.axis]:
            for rep in range(self.replications):
                out.append(apply_axis(self.base, self.axis, value,
                                      seed=self.base.seed + rep))
        return out


def apply_axis(base: ScenarioConfig, axis: str, value,
               seed: Optional[int] = None) -> ScenarioConfig:
    cfg = dataclasses.replace(
        base,
        radio=dataclasses.replace(base.radio),
        transport=dataclasses.replace(base.transport),
        metrics=dataclasses.replace(base.metrics),
    )
    if seed is not None:
        cfg.seed = seed
    if axis == "thresholds":
        cfg.transport.drf_threshold = value
    elif axis == "speeds":
        cfg.speed = float(value)
    elif axis == "flows":
        cfg.flows = int(value)
    elif axis == "protocol":
        cfg.protocol = value
    else:
        raise SweepError(f"unknown sweep axis {axis!r}")
    return cfg.validate()


def _run_one(cfg: ScenarioConfig) -> Dict[str, object]:
    try:
        return run_scenario(cfg)
    except Exception as e:
        raise SweepError(
            f"run failed ({e!r}) for config:\n{save_config(cfg)}") from e


def run_configs(configs: Sequence[ScenarioConfig],
                jobs: int = 1) -> List[Dict[str, object]]:
    if jobs <= 1:
        return [_run_one(cfg) for cfg in configs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, configs))


def run_sweep(spec: SweepSpec, out_dir: str, jobs: int = 1) -> List[Dict[str, object]]:
    configs = spec.configs()
    rows = run_configs(configs, jobs)
    os.makedirs(out_dir, exist_ok=True)
    write_summary_csv(rows, os.path.join(out_dir, "summary.csv"))
    return rows


def paper_suite_configs(base: ScenarioConfig,
                        replications: int = 5) -> Dict[str, List[ScenarioConfig]]:
    """The full trend battery: threshold grid, protocol comparison, dynamics.

    table1: DRF throughput across thresholds for pedestrian/slow/high
    topologies and 1/5/25 flows.  energy: matched-seed ATP vs DRF at
    1/10/30 m/s.  rates: rate dynamics across 1/10/30/50 m/s.
    """

    def variant(**changes):
        cfg = apply_axis(base, "protocol", base.protocol)  # deep copy
        for key, val in changes.items():
            if key == "drf_threshold":
                cfg.transport.drf_threshold = val
            else:
                setattr(cfg, key, val)
        return cfg.validate()

    table1 = []
    for thr in THRESHOLDS:
        for speed in (1.0, 20.0, 30.0):
            for flows in FLOWS:
                for rep in range(replications):
                    table1.append(variant(protocol="drf", drf_threshold=thr,
                                          speed=speed, flows=flows,
                                          seed=base.seed + rep))
    energy = []
    for speed in (1.0, 10.0, 30.0):
        for flows in FLOWS:
            for rep in range(replications):
                for protocol in PROTOCOLS:
                    energy.append(variant(protocol=protocol, speed=speed,
                                          flows=flows, seed=base.seed + rep))
    rates = []
    for speed in (1.0, 10.0, 30.0, 50.0):
        for rep in range(replications):
            rates.append(variant(protocol="drf", speed=speed, flows=1,
                                 seed=base.seed + rep))
    return {"table1": table1, "energy": energy, "rates": rates}


def run_paper_suite(base: ScenarioConfig, out_dir: str, replications: int = 5,
                    jobs: int = 1) -> Dict[str, List[Dict[str, object]]]:
    """Run the full battery and write summary.csv plus per-experiment CSVs."""
    groups = paper_suite_configs(base, replications)
    os.makedirs(out_dir, exist_ok=True)
    results: Dict[str, List[Dict[str, object]]] = {}
    all_rows: List[Dict[str, object]] = []
    for name in ("table1", "energy", "rates"):
        rows = run_configs(groups[name], jobs)
        results[name] = rows
        all_rows.extend(rows)
        write_summary_csv(rows, os.path.join(out_dir, f"summary_{name}.csv"))
    # table 2 view: DRF ack counts, 1 flow, low thresholds
    table2 = [r for r in results["table1"]
              if r["flows"] == 1 and r["threshold_pct"] in (15, 25, 35)]
    write_summary_csv(table2, os.path.join(out_dir, "summary_table2.csv"))
    write_summary_csv(all_rows, os.path.join(out_dir, "summary.csv"))
    return results
