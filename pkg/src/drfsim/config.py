"""Scenario configuration: defaults, flat key=value file format, validation.

The file format is INI-like: section headers with key = value lines.  An
empty file resolves to the default scenario (500 m x 500 m grid, 50 nodes,
200 m / 500 m radio ranges, 2 Mb/s, 2.5 us propagation delay).  Unknown
sections or keys are rejected with the offending name and line number.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
from dataclasses import dataclass, field
from typing import Optional

from .channel import RadioParams
from .core import seconds_to_ticks
from .transport import TransportParams


class ConfigError(Exception):
    pass


@dataclass
class MetricsParams:
    rate_change_epsilon: float = 0.05
    energy_sample_s: float = 1.0


@dataclass
class ScenarioConfig:
    grid_width: float = 500.0
    grid_height: float = 500.0
    nodes: int = 50
    speed: float = 1.0
    flows: int = 1
    duration_s: float = 100.0
    protocol: str = "drf"
    seed: int = 1
    loss_rate: float = 0.0
    app_stop_s: float = 0.0  # 0 = saturated source for the whole run
    radio: RadioParams = field(default_factory=RadioParams)
    transport: TransportParams = field(default_factory=TransportParams)
    metrics: MetricsParams = field(default_factory=MetricsParams)

    def validate(self) -> "ScenarioConfig":
        def err(key, msg):
            raise ConfigError(f"{key}: {msg}")

        if self.grid_width <= 0 or self.grid_height <= 0:
            err("scenario.grid", "grid dimensions must be positive")
        if self.nodes < 2:
            err("scenario.nodes", "need at least 2 nodes")
        if self.speed < 0:
            err("scenario.speed", f"speed must be >= 0, got {self.speed}")
        if self.flows < 1:
            err("scenario.flows", "need at least 1 flow")
        if self.duration_s <= 0:
            err("scenario.duration_s", "duration must be positive")
        if self.protocol not in ("atp", "drf"):
            err("scenario.protocol", f"unknown protocol {self.protocol!r}")
        if not 0.0 <= self.loss_rate < 1.0:
            err("scenario.loss_rate", "loss rate must be in [0, 1)")
        if self.app_stop_s < 0:
            err("scenario.app_stop_s", "must be >= 0")
        try:
            # rebuild so derived values (prop_delay_ticks) track edited fields
            self.radio = RadioParams(**dataclasses.asdict(self.radio))
        except ValueError as e:
            err("radio", str(e))
        t = self.transport
        if (not 0 <= t.alpha < 1 or not 0 <= t.alpha_r < 1
                or not 0 <= t.alpha_r_up < 1):
            err("transport.alpha", "smoothing weights must lie in [0, 1)")
        if t.x < 0 or t.k < 1:
            err("transport.x/k", "require x >= 0 and k >= 1")
        if t.epoch_s <= 0 or t.drf_threshold <= 0:
            err("transport.epoch_s/drf_threshold", "must be positive")
        if min(t.data_size, t.ack_size, t.probe_size, t.elfn_size, t.ctrl_size) <= 0:
            err("transport.sizes", "packet sizes must be positive")
        if t.queue_capacity < 1:
            err("transport.queue_capacity", "must be >= 1")
        if self.metrics.rate_change_epsilon <= 0:
            err("metrics.rate_change_epsilon", "must be positive")
        # durations must land on the tick grid
        for key, val in (
            ("scenario.duration_s", self.duration_s),
            ("radio.prop_delay_s", self.radio.prop_delay_s),
            ("transport.epoch_s", t.epoch_s),
            ("transport.probe_period_s", t.probe_period_s),
            ("transport.liveness_timeout_s", t.liveness_timeout_s),
            ("metrics.energy_sample_s", self.metrics.energy_sample_s),
        ):
            try:
                seconds_to_ticks(val, key)
            except ValueError as e:
                raise ConfigError(str(e)) from None
        return self


_SECTIONS = {
    "scenario": (ScenarioConfig, None),
    "radio": (RadioParams, "radio"),
    "transport": (TransportParams, "transport"),
    "metrics": (MetricsParams, "metrics"),
}

_SCENARIO_KEYS = {
    f.name: f.type
    for f in dataclasses.fields(ScenarioConfig)
    if f.name not in ("radio", "transport", "metrics")
}


def _coerce(key: str, raw: str, target_type) -> object:
    raw = raw.strip()
    try:
        if target_type in (int, "int"):
            return int(raw)
        if target_type in (float, "float"):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def _line_of(text: str, key: str) -> int:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("=")[0].split(":")[0].strip()
        if stripped == key:
            return i
    return 0


def parse_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"parse error: {e}") from None
    cfg = ScenarioConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                f"unknown section [{section}] at line {_line_of(text, section) or '?'}")
        cls, attr = _SECTIONS[section]
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        if section == "scenario":
            fields = _SCENARIO_KEYS
        target = cfg if attr is None else getattr(cfg, attr)
        for key, raw in parser.items(section):
            if key not in fields:
                raise ConfigError(
                    f"unknown key {section}.{key} at line {_line_of(text, key)}")
            setattr(target, key, _coerce(f"{section}.{key}", raw, fields[key]))
    return cfg.validate()


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text)


def save_config(cfg: ScenarioConfig) -> str:
    """Canonical text form; parse_config(save_config(c)) == c."""
    out = io.StringIO()
    out.write("[scenario]\n")
    for name in _SCENARIO_KEYS:
        out.write(f"{name} = {getattr(cfg, name)}\n")
    for section, attr in (("radio", "radio"), ("transport", "transport"),
                          ("metrics", "metrics")):
        out.write(f"\n[{section}]\n")
        obj = getattr(cfg, attr)
        for f in dataclasses.fields(obj):
            if f.name == "prop_delay_ticks":
                continue
            out.write(f"{f.name} = {getattr(obj, f.name)}\n")
    return out.getvalue()


def scenario_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(save_config(cfg).encode()).hexdigest()[:16]


def scenario_id(cfg: ScenarioConfig) -> str:
    return (f"{cfg.protocol}-t{round(cfg.transport.drf_threshold * 100)}"
            f"-v{cfg.speed:g}-f{cfg.flows}-s{cfg.seed}")
