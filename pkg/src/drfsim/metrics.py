"""Run statistics computed purely from the structured event log.

Every quantity in a summary row is a function of (event log, config), so a
persisted log replays to byte-identical CSV output.  The energy-per-bit
metric is emitted in two forms: the ratio n*p*8/es as printed in the source
material (dimensionally bits per joule) and its reciprocal in joules per
bit; columns are named for what they measure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

from .channel import RadioParams, tx_duration_ticks
from .core import LOG_FIELDS, TICKS_PER_SECOND, Record, seconds_to_ticks
from .transport import ACK_RATE, DATA, ELFN, PROBE


@dataclass
class FlowStats:
    src: int = -1
    dst: int = -1
    sent: int = 0               # DATA copies launched at the source
    retransmitted: int = 0
    delivered: int = 0          # unique sequence numbers at the application
    delivered_copies: int = 0
    dropped: int = 0            # DATA copies lost anywhere en route
    acks_sent: int = 0
    duration_s: float = 0.0

    @property
    def in_flight(self) -> int:
        return self.sent - self.delivered_copies - self.dropped


def throughput(stats: FlowStats) -> float:
    """Delivered packets per second."""
    if stats.duration_s <= 0:
        raise ValueError("duration must be positive")
    return stats.delivered / stats.duration_s


def energy_per_bit(n: int, p: int, es: float) -> Tuple[float, float]:
    """(n*p*8/es as printed, and the dimensional reciprocal es/(n*p*8))."""
    if n <= 0 or p <= 0 or es <= 0:
        raise ValueError("n, p, es must all be positive")
    bits = n * p * 8
    return bits / es, es / bits


def rate_change_events(samples: Sequence[Tuple[int, float]], epsilon: float = 0.05,
                       end_tick: int = None) -> Tuple[int, float, float]:
    """(change count, time-weighted mean rate, max deviation from mean).

    A change is a consecutive sample pair whose relative rate difference is
    at least epsilon.  The last sample extends to end_tick when given.
    """
    if not samples:
        raise ValueError("empty rate trace")
    count = 0
    prev = samples[0][1]
    for _, r in samples[1:]:
        if abs(r - prev) >= epsilon * prev:
            count += 1
        prev = r
    last_tick = end_tick if end_tick is not None else samples[-1][0]
    span = last_tick - samples[0][0]
    if span <= 0:
        mean = samples[0][1]
    else:
        acc = 0.0
        for (t0, r), (t1, _) in zip(samples, samples[1:]):
            acc += r * (t1 - t0)
        acc += samples[-1][1] * (last_tick - samples[-1][0])
        mean = acc / span
    max_dev = max(abs(r - mean) for _, r in samples)
    return count, mean, max_dev


def _dur_s(size: int, bitrate: int) -> float:
    return tx_duration_ticks(size, bitrate) / TICKS_PER_SECOND


def energy_by_kind(records: Iterable[Record], radio: RadioParams) -> Dict[str, float]:
    """Joules attributable to each packet kind (tx + rx), plus CTRL."""
    out: Dict[str, float] = {}
    for tick, kind, node, flow, pkt, seq, size, value in records:
        if kind == "tx":
            out[pkt] = out.get(pkt, 0.0) + radio.tx_power * _dur_s(size, radio.bitrate)
        elif kind == "rx":
            out[pkt] = out.get(pkt, 0.0) + radio.rx_power * _dur_s(size, radio.bitrate)
        elif kind == "ctrl":
            d = _dur_s(size, radio.bitrate)
            out["CTRL"] = out.get("CTRL", 0.0) + (radio.tx_power + radio.rx_power) * d
    return out


def ack_energy_share(records: Iterable[Record], radio: RadioParams) -> float:
    """Joules spent transmitting and receiving ACK+Rate packets."""
    total = 0.0
    for tick, kind, node, flow, pkt, seq, size, value in records:
        if pkt != ACK_RATE:
            continue
        if kind == "tx":
            total += radio.tx_power * _dur_s(size, radio.bitrate)
        elif kind == "rx":
            total += radio.rx_power * _dur_s(size, radio.bitrate)
    return total


def node_energy(records: Iterable[Record], radio: RadioParams,
                node_count: int) -> List[Tuple[float, float]]:
    """Per-node (e_tx, e_rx) recomputed from the log, in log order.

    Summation order matches the live ledgers exactly, so equality is exact.
    """
    e = [[0.0, 0.0] for _ in range(node_count)]
    for tick, kind, node, flow, pkt, seq, size, value in records:
        if kind == "tx":
            e[node][0] += radio.tx_power * _dur_s(size, radio.bitrate)
        elif kind == "rx":
            e[node][1] += radio.rx_power * _dur_s(size, radio.bitrate)
        elif kind == "ctrl":
            d = _dur_s(size, radio.bitrate)
            e[node][0] += radio.tx_power * d
            e[int(value)][1] += radio.rx_power * d
    return [tuple(pair) for pair in e]


def drf_quiescence_violations(records: Iterable[Record], flow: int,
                              threshold: float,
                              min_interval_ticks: int = 0) -> int:
    """Replay the DRF trigger over the log; count rule violations.

    Violations are: a drf_change emission below the trigger threshold, or a
    quiet sample (no ACK at its tick) at or beyond the threshold while the
    change-feedback rate limiter was open.  Loss, fill, first, and probe
    emissions are exempt from the magnitude rule but still reset the
    reference rate, exactly as the receiver does; a reconnect report is pure
    recovery state and leaves the reference untouched.
    """
    samples: List[Tuple[int, float]] = []
    acks: List[Tuple[int, str]] = []
    for tick, kind, node, fl, pkt, seq, size, value in records:
        if fl != flow:
            continue
        if kind == "rate_sample":
            samples.append((tick, value))
        elif kind == "ack_sent":
            acks.append((tick, value))
    ack_ticks = {t for t, _ in acks}
    violations = 0
    r_last = None
    last_ack_tick = 0
    ai = 0
    for tick, r in samples:
        fired = tick in ack_ticks
        if fired:
            while ai < len(acks) and acks[ai][0] < tick:
                ai += 1
            trigger = acks[ai][1] if ai < len(acks) else ""
            if trigger == "drf_change":
                if r_last is None or abs(r - r_last) < threshold * r_last:
                    violations += 1
            if trigger != "reconnect":
                r_last = r
                last_ack_tick = tick
            ai += 1
        else:
            if (r_last is not None
                    and abs(r - r_last) >= threshold * r_last
                    and tick - last_ack_tick >= min_interval_ticks):
                violations += 1
    return violations


SUMMARY_COLUMNS = [
    "scenario_id", "protocol", "threshold_pct", "speed_mps", "flows", "seed",
    "duration_s", "throughput_pps", "acks_sent", "rate_changes",
    "mean_rate_pps", "total_energy_j", "ack_energy_j", "e_joules_per_bit",
    "e_paper_bits_per_joule", "drf_violations", "scenario_hash",
    "mobility_hash",
]


def collect_flow_stats(records: Iterable[Record],
                       duration_s: float) -> Dict[int, FlowStats]:
    """Per-flow counters from the log; flow endpoints from 'flow' records."""
    stats: Dict[int, FlowStats] = {}
    for tick, kind, node, flow, pkt, seq, size, value in records:
        if kind == "flow":
            stats[flow] = FlowStats(src=node, dst=seq, duration_s=duration_s)
    for tick, kind, node, flow, pkt, seq, size, value in records:
        if flow < 0 or flow not in stats:
            continue
        st = stats[flow]
        if kind == "send":
            st.sent += 1
            if value == 1.0:
                st.retransmitted += 1
        elif kind == "app_deliver":
            st.delivered += 1
        elif kind == "rx" and pkt == DATA and node == st.dst:
            st.delivered_copies += 1
        elif kind == "drop" and pkt == DATA:
            st.dropped += 1
        elif kind == "ack_sent":
            st.acks_sent += 1
    return stats


def rate_traces(records: Iterable[Record]) -> Dict[int, List[Tuple[int, float]]]:
    traces: Dict[int, List[Tuple[int, float]]] = {}
    for tick, kind, node, flow, pkt, seq, size, value in records:
        if kind == "rate_sample":
            traces.setdefault(flow, []).append((tick, value))
    return traces


def summarize(records: Sequence[Record], cfg, mobility_hash: str,
              scen_hash: str, scen_id: str) -> Dict[str, object]:
    """One summary row for a completed run."""
    duration_s = cfg.duration_s
    end_tick = int(round(duration_s * TICKS_PER_SECOND))
    stats = collect_flow_stats(records, duration_s)
    traces = rate_traces(records)
    flow_ids = sorted(stats)
    tputs = [throughput(stats[f]) for f in flow_ids]
    acks_total = sum(stats[f].acks_sent for f in flow_ids)
    changes = 0
    means = []
    eps = cfg.metrics.rate_change_epsilon
    for f in flow_ids:
        trace = traces.get(f)
        if trace:
            c, m, _ = rate_change_events(trace, eps, end_tick)
            changes += c
            means.append(m)
    by_kind = energy_by_kind(records, cfg.radio)
    total_energy = sum(by_kind.values())
    ack_energy = by_kind.get(ACK_RATE, 0.0)
    n_data_tx = sum(1 for r in records if r[1] == "tx" and r[4] == DATA)
    if n_data_tx > 0 and total_energy > 0:
        paper_ratio, jpb = energy_per_bit(n_data_tx, cfg.transport.data_size,
                                          total_energy)
    else:
        paper_ratio, jpb = 0.0, 0.0
    violations = 0
    if cfg.protocol == "drf":
        for f in flow_ids:
            violations += drf_quiescence_violations(
                records, f, cfg.transport.drf_threshold,
                seconds_to_ticks(cfg.transport.drf_min_interval_s,
                                 "drf_min_interval"))
    return {
        "scenario_id": scen_id,
        "protocol": cfg.protocol,
        "threshold_pct": round(cfg.transport.drf_threshold * 100),
        "speed_mps": cfg.speed,
        "flows": cfg.flows,
        "seed": cfg.seed,
        "duration_s": duration_s,
        "throughput_pps": sum(tputs) / len(tputs) if tputs else 0.0,
        "acks_sent": acks_total,
        "rate_changes": changes,
        "mean_rate_pps": sum(means) / len(means) if means else 0.0,
        "total_energy_j": total_energy,
        "ack_energy_j": ack_energy,
        "e_joules_per_bit": jpb,
        "e_paper_bits_per_joule": paper_ratio,
        "drf_violations": violations,
        "scenario_hash": scen_hash,
        "mobility_hash": mobility_hash,
    }


def write_summary_csv(rows: Sequence[Dict[str, object]], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([str(row[c]) for c in SUMMARY_COLUMNS])


def write_log_csv(records: Iterable[Record], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(LOG_FIELDS)
        for rec in records:
            writer.writerow([str(v) for v in rec])


def read_log_csv(path: str) -> List[Record]:
    records: List[Record] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        next(reader)  # header
        for tick, kind, node, flow, pkt, seq, size, value in reader:
            try:
                val: object = float(value)
            except ValueError:
                val = value
            records.append((int(tick), kind, int(node), int(flow), pkt,
                            int(seq), int(size), val))
    return records
