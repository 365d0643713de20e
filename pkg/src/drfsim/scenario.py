"""Wires kernel, mobility, channel, routing and transport into one run."""

from __future__ import annotations

import os
from typing import Dict, List, Optional, Sequence, Tuple

from .channel import Medium, tx_duration_ticks
from .config import ScenarioConfig, scenario_hash, scenario_id
from .core import RngStream, Simulator, seconds_to_ticks, TICKS_PER_SECOND
from .mobility import Position, RandomWaypointModel
from .metrics import rate_traces, summarize, write_log_csv
from .routing import Router
from .transport import (ACK_RATE, DATA, ELFN, PROBE, NodeDelayEstimator,
                        Packet, Receiver, Sender, stamp_congestion)


class ScenarioError(Exception):
    pass


class World:
    """One isolated simulation instance."""

    def __init__(self, cfg: ScenarioConfig,
                 initial_positions: Optional[Sequence[Position]] = None):
        cfg.validate()
        self.cfg = cfg
        self.sim = Simulator()
        self.mobility = RandomWaypointModel(
            cfg.nodes, cfg.grid_width, cfg.grid_height, cfg.speed, cfg.seed,
            initial_positions)
        self.medium = Medium(
            self.sim, self.mobility, cfg.radio, cfg.nodes,
            cfg.transport.queue_capacity,
            jitter_rng=RngStream(cfg.seed, "jitter"),
            loss_rng=RngStream(cfg.seed, "loss"),
            loss_rate=cfg.loss_rate)
        self.router = Router(self.mobility, cfg.nodes, cfg.radio.tx_range)
        self.estimators = [NodeDelayEstimator(cfg.transport.alpha)
                           for _ in range(cfg.nodes)]
        self.medium.on_transmit_start = self._on_transmit_start
        self.medium.on_receive = self._on_receive
        self.medium.on_link_break = self._on_link_break
        self.flows: Dict[int, Tuple[Sender, Receiver]] = {}
        self._elfn_done: Dict[int, set] = {}

    # -- flow setup --------------------------------------------------------

    def add_flow(self, src: int, dst: int) -> int:
        if src == dst:
            raise ScenarioError("flow endpoints must differ")
        flow = len(self.flows)
        sender = Sender(self, flow, src, dst, self.cfg.protocol,
                        self.cfg.transport, self.cfg.radio.bitrate)
        if self.cfg.app_stop_s > 0:
            sender.app_stop_tick = seconds_to_ticks(self.cfg.app_stop_s,
                                                    "app_stop")
        receiver = Receiver(self, flow, src, dst, self.cfg.protocol,
                            self.cfg.transport, self.cfg.radio.bitrate)
        self.flows[flow] = (sender, receiver)
        self._elfn_done[flow] = set()
        self.sim.log.add(0, "flow", src, flow, seq=dst)
        return flow

    def draw_flows(self) -> None:
        rng = RngStream(self.cfg.seed, "flow-selection")
        n = self.cfg.nodes
        for _ in range(self.cfg.flows):
            for attempt in range(100):
                src = rng.randrange(n)
                dst = rng.randrange(n)
                if src == dst:
                    continue
                if self.router.find_route(src, dst, 0) is not None:
                    self.add_flow(src, dst)
                    break
            else:
                raise ScenarioError(
                    "could not draw a connected source/destination pair "
                    "in 100 attempts")

    def start(self) -> None:
        for sender, receiver in self.flows.values():
            receiver.start()
            sender.start()

    def run(self) -> None:
        if not self.flows:
            self.draw_flows()
        self.start()
        self.sim.run_until(seconds_to_ticks(self.cfg.duration_s, "duration"))

    # -- medium callbacks ----------------------------------------------------

    def _on_transmit_start(self, node: int, pkt: Packet, q_s: float,
                           c_s: float) -> None:
        est = self.estimators[node]
        est.update(q_s, c_s)
        if pkt.kind == DATA or pkt.kind == PROBE:
            stamp_congestion(pkt, est.d_avg)

    def _on_receive(self, node: int, pkt: Packet) -> None:
        pkt.hop += 1
        if pkt.hop < len(pkt.route) - 1:
            self.medium.enqueue(node, pkt, pkt.route[pkt.hop + 1])
            return
        sender, receiver = self.flows[pkt.flow]
        if pkt.kind == DATA:
            receiver.on_data(pkt)
        elif pkt.kind == PROBE:
            receiver.on_probe(pkt)
        elif pkt.kind == ACK_RATE:
            sender.on_ack(pkt)
        elif pkt.kind == ELFN:
            self.sim.log.add(self.sim.now, "elfn_delivered", node, pkt.flow)
            sender.on_elfn(pkt)

    def _on_link_break(self, node: int, pkt: Packet) -> None:
        if pkt.kind != DATA:
            return
        sender = self.flows[pkt.flow][0]
        done = self._elfn_done[pkt.flow]
        if (pkt.route_epoch in done or sender.phase != "CONNECTED"
                or pkt.route_epoch != sender.route_epoch):
            return
        done.add(pkt.route_epoch)
        self.sim.log.add(self.sim.now, "link_break", node, pkt.flow,
                         value=float(pkt.hop))
        if pkt.hop == 0:
            # break on the first hop: the sender learns locally
            sender.on_elfn(pkt)
        else:
            elfn = Packet(ELFN, pkt.flow, size=self.cfg.transport.elfn_size,
                          route=tuple(reversed(pkt.route[:pkt.hop + 1])),
                          route_epoch=pkt.route_epoch)
            self.medium.enqueue(node, elfn, elfn.route[1])


def run_world(cfg: ScenarioConfig,
              initial_positions: Optional[Sequence[Position]] = None) -> World:
    world = World(cfg, initial_positions)
    world.run()
    return world


def run_scenario(cfg: ScenarioConfig, out_dir: Optional[str] = None,
                 traces: bool = False) -> Dict[str, object]:
    """Run one scenario and return its summary row; optionally dump traces."""
    world = run_world(cfg)
    end_tick = seconds_to_ticks(cfg.duration_s, "duration")
    mob_hash = world.mobility.trace_hash(end_tick)
    row = summarize(world.sim.log.records, cfg, mob_hash, scenario_hash(cfg),
                    scenario_id(cfg))
    if traces and out_dir:
        dump_traces(world, out_dir)
    return row


def dump_traces(world: World, out_dir: str) -> None:
    """Optional per-run trace files derived from the event log."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = world.cfg
    sid = scenario_id(cfg)
    write_log_csv(world.sim.log.records, os.path.join(out_dir, f"{sid}-events.csv"))

    sample = seconds_to_ticks(cfg.metrics.energy_sample_s, "energy_sample")
    end = seconds_to_ticks(cfg.duration_s, "duration")
    with open(os.path.join(out_dir, f"{sid}-mobility.csv"), "w") as f:
        f.write("tick,node_id,x,y\n")
        for tick in range(0, end + 1, sample):
            for node in range(cfg.nodes):
                x, y = world.mobility.position(node, tick)
                f.write(f"{tick},{node},{x!r},{y!r}\n")

    with open(os.path.join(out_dir, f"{sid}-energy.csv"), "w") as f:
        f.write("tick,node_id,e_tx_j,e_rx_j,e_total_j\n")
        idx = 0
        records = world.sim.log.records
        e = [[0.0, 0.0] for _ in range(cfg.nodes)]
        for t in range(0, end + 1, sample):
            while idx < len(records) and records[idx][0] <= t:
                _, kind, node, _, _, _, size, value = records[idx]
                if kind in ("tx", "rx", "ctrl"):
                    d = (tx_duration_ticks(size, cfg.radio.bitrate)
                         / TICKS_PER_SECOND)
                    if kind == "tx":
                        e[node][0] += cfg.radio.tx_power * d
                    elif kind == "rx":
                        e[node][1] += cfg.radio.rx_power * d
                    else:
                        e[node][0] += cfg.radio.tx_power * d
                        e[int(value)][1] += cfg.radio.rx_power * d
                idx += 1
            for node in range(cfg.nodes):
                f.write(f"{t},{node},{e[node][0]!r},{e[node][1]!r},"
                        f"{e[node][0] + e[node][1]!r}\n")

    traces = rate_traces(world.sim.log.records)
    with open(os.path.join(out_dir, f"{sid}-rates.csv"), "w") as f:
        f.write("tick,flow_id,role,rate_pps\n")
        for flow in sorted(traces):
            for tick, r in traces[flow]:
                f.write(f"{tick},{flow},receiver_R,{r!r}\n")

    with open(os.path.join(out_dir, f"{sid}-feedback.csv"), "w") as f:
        f.write("tick,flow_id,trigger\n")
        for rec in world.sim.log.records:
            if rec[1] == "ack_sent":
                f.write(f"{rec[0]},{rec[3]},{rec[7]}\n")
