"""Deterministic simulator of rate-based transport over mobile ad hoc networks.

Compares the epoch-timer ACK+Rate feedback baseline against dynamic rate
feedback (feedback only on a +/-25% collated-rate change), with energy
accounting per node and an experiment harness for threshold, mobility and
energy sweeps.
"""

from .config import ScenarioConfig, load_config, parse_config, save_config
from .scenario import run_scenario, run_world

__all__ = [
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "save_config",
    "run_scenario",
    "run_world",
]
