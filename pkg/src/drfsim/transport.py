"""Rate-based transport with intermediate-node delay feedback.

The sender is timer-clocked: it emits DATA at its current rate S and never
sends in response to an ACK.  Nodes along the path stamp each DATA/PROBE
packet with the max of their smoothed queuing+contention delay; the receiver
collates the stamped delays into a rate R = 1/delay and reports it back in
ACK+Rate packets.  Two feedback policies are implemented:

  * epoch timer (baseline): one ACK+Rate per fixed period, plus capped
    loss-triggered ACKs;
  * dynamic rate feedback (DRF): an ACK+Rate only when R moved by at least
    the configured fraction of the last reported rate, or on loss.

Reliability is SACK-based; the sender buffers every sequence number until a
SACK block covers it.
"""

from __future__ import annotations

import logging
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .core import SECOND, TICKS_PER_SECOND, seconds_to_ticks

log = logging.getLogger(__name__)

DATA = "DATA"
PROBE = "PROBE"
ACK_RATE = "ACK_RATE"
ELFN = "ELFN"

TICK_S = 1.0 / TICKS_PER_SECOND


@dataclass
class Packet:
    kind: str
    flow: int
    seq: int = -1
    size: int = 0
    congestion_delay: float = 0.0
    rate_feedback: float = 0.0
    sack_blocks: Tuple[Tuple[int, int], ...] = ()
    route: Tuple[int, ...] = ()
    hop: int = 0  # index of the node currently holding the packet
    route_epoch: int = 0
    trigger: str = ""  # what caused an ACK+Rate (see Receiver._send_ack)


@dataclass
class TransportParams:
    x: float = 0.1              # rate-increase threshold fraction
    k: float = 1.5              # rate-increase divisor
    alpha: float = 0.995        # per-node delay smoothing weight
    alpha_r: float = 0.95       # receiver collation weight, delay improving
    alpha_r_up: float = 0.9     # receiver collation weight, delay worsening
    epoch_s: float = 1.0
    drf_threshold: float = 0.25
    drf_min_interval_s: float = 1.25  # min spacing of rate-limited ACKs
    repair_budget_s: float = 5.0  # loss/fill report spacing = threshold x this
    drf_warmup_s: float = 2.0   # relaxed ACK spacing after a route change
    reconnect_reports: int = 2  # reception-state reports after a route change
    reconnect_report_gap_s: float = 0.5
    probe_headroom: float = 0.25  # band kept over a probe rate snapshot
    data_size: int = 512
    ack_size: int = 40
    probe_size: int = 40
    elfn_size: int = 32
    ctrl_size: int = 32
    queue_capacity: int = 8
    probe_period_s: float = 1.0
    route_discovery_s: float = 1.5  # route (re)discovery latency per probe
    liveness_timeout_s: float = 1.5
    retrans_holdoff_s: float = 2.0  # min spacing between resends of one seq
    retrans_interval_s: float = 0.4  # min spacing between resends of a flow
    sack_cadence: int = 20      # min DATA between extra loss ACKs (epoch mode)
    max_sack_blocks: int = 8


# -- pure rate/delay algebra ---------------------------------------------


def update_delay_estimate(d_avg: Optional[float], q: float, c: float,
                          alpha: float) -> float:
    """Exponentially weighted average of per-packet queuing+contention delay."""
    if q < 0 or c < 0:
        raise ValueError("delays must be non-negative")
    sample = q + c
    if d_avg is None:
        return sample
    return alpha * d_avg + (1.0 - alpha) * sample


def stamp_congestion(pkt: Packet, d_avg: float) -> None:
    """Max-stamp the node's delay estimate into a DATA/PROBE header."""
    if pkt.congestion_delay < d_avg:
        pkt.congestion_delay = d_avg


def collate_delay(d_collated: Optional[float], pkt_delay: float,
                  alpha_r: float) -> float:
    """Receiver-side smoothing of stamped delays; first packet initializes."""
    if d_collated is None:
        return pkt_delay
    return alpha_r * d_collated + (1.0 - alpha_r) * pkt_delay


def update_sender_rate(rate_s: float, r_feedback: float, x: float, k: float,
                       rate_cap: float) -> float:
    """Apply one feedback sample: damped increase beyond the x-gate,
    immediate decrease to the reported rate."""
    if r_feedback <= 0:
        raise ValueError("feedback rate must be positive")
    s = rate_s
    if r_feedback > s * (1.0 + x):
        s = s + (r_feedback - s) / k
    elif r_feedback < s:
        s = r_feedback
    return min(s, rate_cap)


class NodeDelayEstimator:
    """Per-node smoothed queuing+contention delay (the stamped quantity)."""

    __slots__ = ("alpha", "d_avg")

    def __init__(self, alpha: float):
        self.alpha = alpha
        self.d_avg: Optional[float] = None

    def update(self, q: float, c: float) -> float:
        self.d_avg = update_delay_estimate(self.d_avg, q, c, self.alpha)
        return self.d_avg

    @property
    def value(self) -> float:
        return self.d_avg if self.d_avg is not None else 0.0


# -- received-sequence bookkeeping ----------------------------------------


class SeqIntervals:
    """Sorted disjoint inclusive ranges of received sequence numbers."""

    def __init__(self):
        self.starts: List[int] = []
        self.ends: List[int] = []

    def __contains__(self, seq: int) -> bool:
        i = bisect_right(self.starts, seq) - 1
        return i >= 0 and seq <= self.ends[i]

    def add(self, seq: int) -> bool:
        """Insert seq; returns False if it was already present."""
        i = bisect_right(self.starts, seq) - 1
        if i >= 0 and seq <= self.ends[i]:
            return False
        join_left = i >= 0 and self.ends[i] == seq - 1
        join_right = i + 1 < len(self.starts) and self.starts[i + 1] == seq + 1
        if join_left and join_right:
            self.ends[i] = self.ends[i + 1]
            del self.starts[i + 1], self.ends[i + 1]
        elif join_left:
            self.ends[i] = seq
        elif join_right:
            self.starts[i + 1] = seq
        else:
            self.starts.insert(i + 1, seq)
            self.ends.insert(i + 1, seq)
        return True

    def blocks(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(zip(self.starts, self.ends))

    def missing_below(self, limit: int) -> List[int]:
        """Every sequence < limit not contained in any range."""
        out = []
        prev_end = -1
        for a, b in zip(self.starts, self.ends):
            if a > limit:
                break
            out.extend(range(prev_end + 1, min(a, limit)))
            prev_end = b
        out.extend(range(prev_end + 1, limit))
        return out


def build_sack(blocks: Tuple[Tuple[int, int], ...],
               max_blocks: int = 8) -> Tuple[Tuple[int, int], ...]:
    """SACK payload: the cumulative block plus the most recent ranges,
    capped at max_blocks, kept sorted."""
    if not blocks:
        raise ValueError("build_sack requires at least one received packet")
    if len(blocks) <= max_blocks:
        return blocks
    return (blocks[0],) + blocks[-(max_blocks - 1):]


def detect_loss(max_seq: int, seq: int) -> bool:
    """True iff a new arrival leaves a gap below the highest sequence."""
    return seq > max_seq + 1


# -- endpoints -------------------------------------------------------------


class Sender:
    """Timer-clocked sender for one flow.  Saturated application source."""

    def __init__(self, world, flow: int, src: int, dst: int, mode: str,
                 params: TransportParams, bitrate: int):
        self.world = world
        self.sim = world.sim
        self.flow = flow
        self.src = src
        self.dst = dst
        self.mode = mode
        self.p = params
        self.rate_cap = bitrate / (8.0 * params.data_size)
        self.phase = "PROBE"
        self.rate_s: float = 0.0
        self.route: Optional[Tuple[int, ...]] = None
        self.route_epoch = 0
        self.gen = 0
        self.unacked: set = set()
        self.retrans: List[int] = []
        self._retrans_set: set = set()
        self._resend_tick: Dict[int, int] = {}
        self._holdoff_ticks = seconds_to_ticks(params.retrans_holdoff_s,
                                               "retrans_holdoff")
        self._retrans_interval = seconds_to_ticks(params.retrans_interval_s,
                                                  "retrans_interval")
        self._last_retrans = -self._retrans_interval
        self.next_seq = 0
        self.last_feedback = 0
        self.halved = False
        self.app_stop_tick: Optional[int] = None
        self._epoch_ticks = seconds_to_ticks(params.epoch_s, "epoch")
        self._probe_ticks = seconds_to_ticks(params.probe_period_s, "probe_period")
        self._liveness_ticks = seconds_to_ticks(params.liveness_timeout_s,
                                                "liveness_timeout")

    def start(self) -> None:
        self.enter_probe()
        interval = self._epoch_ticks if self.mode == "atp" else SECOND // 2
        self._liveness_loop(interval)

    # -- connection initiation ------------------------------------------

    def enter_probe(self) -> None:
        self.phase = "PROBE"
        self.gen += 1
        gen = self.gen
        self.sim.schedule_in(0, lambda: self._probe_attempt(gen))

    def _probe_attempt(self, gen: int) -> None:
        if gen != self.gen or self.phase != "PROBE":
            return
        route = self.world.router.find_route(self.src, self.dst, self.sim.now)
        if route is None or len(route) < 2:
            self.sim.schedule_in(self._probe_ticks,
                                 lambda: self._probe_attempt(gen))
            return
        if route == self.route:
            # liveness re-probe over the cached, still-valid route: no
            # discovery needed, the probe can go straight out
            latency = 0
        else:
            # route discovery floods the request network-wide (one real
            # broadcast grant per node) and waits for the reply; without
            # these costs mobility would be nearly free and throughput
            # would not fall with speed
            self.world.medium.flood_control(self.p.ctrl_size, self.flow)
            latency = (self.world.medium.charge_control_round_trip(
                           route, self.p.ctrl_size, self.flow)
                       + seconds_to_ticks(self.p.route_discovery_s,
                                          "route_discovery"))
        self.sim.log.add(self.sim.now, "route_found", self.src, self.flow,
                         value=float(len(route)))
        pkt = Packet(PROBE, self.flow, size=self.p.probe_size, route=route,
                     route_epoch=self.route_epoch + 1)
        self.sim.schedule_in(latency, lambda: self._launch_probe(gen, pkt))
        # the retry clock starts once the probe is actually on the air
        self.sim.schedule_in(latency + self._probe_ticks,
                             lambda: self._probe_attempt(gen))

    def _launch_probe(self, gen: int, pkt: Packet) -> None:
        if gen != self.gen or self.phase != "PROBE":
            return
        self.world.medium.enqueue(self.src, pkt, pkt.route[1])

    def _connect(self, r_feedback: float, route: Tuple[int, ...]) -> None:
        same_route = route == self.route
        self.route = route
        self.route_epoch += 1
        rate = max(r_feedback, 1e-9)
        if self.rate_s > 0:
            # reconnect with an established rate (same-route liveness probe
            # or a re-routed flow).  The probe snapshot reflects a lightly
            # loaded path, so it is not adopted wholesale; keeping the rate
            # across route changes preserves the feedback threshold's
            # semantics: a stale rate is corrected by the receiver's next
            # report, at a latency the threshold sets
            self._apply_banded(rate)
        else:
            self.rate_s = min(rate, self.rate_cap)
        self.phase = "CONNECTED"
        self.gen += 1
        self.halved = False
        gen = self.gen
        self.sim.schedule_in(self._gap_ticks(), lambda: self._tick(gen))

    def _apply_banded(self, rate: float) -> None:
        # a rate snapshot from a source other than deliberate change
        # feedback (probe reply, reconnect report) bounds the sender within
        # the reporting dead band: overdriving beyond rate*(1+threshold) is
        # what the receiver would have reported, so the rate is capped at
        # the band edge; below the band it acts as ordinary damped, x-gated
        # feedback on the way up; inside the band the current rate stands.
        # A probe samples the path at its quietest, so the sender keeps a
        # minimum headroom over the snapshot even for tight thresholds
        # constant headroom: the snapshot is advisory, and coupling its
        # firmness to the reporting threshold would confound the threshold's
        # real cost (feedback staleness) with an artifact of the probe path
        head = self.p.probe_headroom
        up = max(self.rate_s, update_sender_rate(
            self.rate_s, rate, self.p.x, self.p.k, self.rate_cap))
        self.rate_s = min(up, max(rate, 1e-9) * (1.0 + head))

    # -- rate-clocked transmission ---------------------------------------

    def _gap_ticks(self) -> int:
        return max(1, round(TICKS_PER_SECOND / self.rate_s))

    def _tick(self, gen: int) -> None:
        if gen != self.gen:
            return
        self.sim.schedule_in(self._gap_ticks(), lambda: self._tick(gen))
        while self.retrans and self.retrans[0] not in self.unacked:
            self._retrans_set.discard(self.retrans.pop(0))
        # recovery pacing: while fresh data is still flowing, resends are
        # spaced at a fixed interval so a deep repair backlog cannot starve
        # fresh data — at saturation the backlog would only churn the queue.
        # Once the application stops there is nothing to starve, and
        # recovery runs at the full send rate
        stopped = (self.app_stop_tick is not None
                   and self.sim.now >= self.app_stop_tick)
        may_resend = (stopped or self.sim.now - self._last_retrans
                      >= self._retrans_interval)
        if self.retrans and may_resend:
            self._last_retrans = self.sim.now
            seq = self.retrans.pop(0)
            self._retrans_set.discard(seq)
            self._resend_tick[seq] = self.sim.now
            retransmission = True
        else:
            if stopped:
                return
            seq = self.next_seq
            self.next_seq += 1
            retransmission = False
        self.unacked.add(seq)
        pkt = Packet(DATA, self.flow, seq=seq, size=self.p.data_size,
                     route=self.route, route_epoch=self.route_epoch)
        self.sim.log.add(self.sim.now, "send", self.src, self.flow, DATA, seq,
                         self.p.data_size, 1.0 if retransmission else 0.0)
        self.world.medium.enqueue(self.src, pkt, self.route[1])

    # -- feedback ----------------------------------------------------------

    def on_ack(self, pkt: Packet) -> None:
        # any ACK proves the path and the receiver are alive; the watchdog
        # exists to detect silence, not to regulate the rate
        self.last_feedback = self.sim.now
        self.halved = False
        if pkt.sack_blocks:
            covered = pkt.sack_blocks
            self.unacked = {
                s for s in self.unacked
                if not any(a <= s <= b for a, b in covered)
            }
            high = covered[-1][1]
            # a sequence the receiver still reports missing is re-queued only
            # after a holdoff from its last resend: at saturation the resend's
            # own queueing delay exceeds the repair-report spacing, and
            # re-sending a copy that is still in flight only burns airtime
            now = self.sim.now
            for s in sorted(self.unacked):
                if (s < high and s not in self._retrans_set
                        and now - self._resend_tick.get(s, -self._holdoff_ticks)
                        >= self._holdoff_ticks):
                    self.retrans.append(s)
                    self._retrans_set.add(s)
            if len(self._resend_tick) > 2 * len(self.unacked) + 64:
                self._resend_tick = {s: t for s, t in self._resend_tick.items()
                                     if s in self.unacked}
        if self.phase == "PROBE":
            route = tuple(reversed(pkt.route))
            if len(route) >= 2 and route[0] == self.src:
                self._connect(pkt.rate_feedback, route)
        elif self.mode == "atp" or pkt.trigger in ("drf_change", "first"):
            # deliberate rate feedback applies the full update rule.
            # Loss/fill/reconnect ACKs exist for reliability: their rate
            # snapshot is taken mid-recovery and would systematically drag
            # the rate down, so it is not applied
            self.rate_s = update_sender_rate(self.rate_s, pkt.rate_feedback,
                                             self.p.x, self.p.k, self.rate_cap)

    def on_elfn(self, pkt: Packet) -> None:
        if self.phase == "CONNECTED" and pkt.route_epoch == self.route_epoch:
            self.enter_probe()

    # -- liveness ---------------------------------------------------------

    def _liveness_loop(self, interval: int) -> None:
        self.sim.schedule_in(interval, lambda: self._liveness_loop(interval))
        if self.phase != "CONNECTED":
            return
        elapsed = self.sim.now - self.last_feedback
        if self.mode == "atp":
            periods = elapsed // self._epoch_ticks
            if periods >= 3:
                self.sim.log.add(self.sim.now, "liveness_probe", self.src, self.flow)
                self.enter_probe()
            elif periods >= 2 and not self.halved:
                self.rate_s = max(self.rate_s / 2.0, 1e-9)
                self.halved = True
        else:
            if elapsed >= self._liveness_ticks:
                self.sim.log.add(self.sim.now, "liveness_probe", self.src, self.flow)
                self.enter_probe()


class Receiver:
    """Collates stamped delays into a rate and decides when to feed back."""

    def __init__(self, world, flow: int, src: int, dst: int, mode: str,
                 params: TransportParams, bitrate: int):
        self.world = world
        self.sim = world.sim
        self.flow = flow
        self.src = src
        self.dst = dst
        self.mode = mode
        self.p = params
        # every hop of the route shares one channel, so the path cannot
        # sustain better than one serialization time per hop; flooring the
        # stamped delay at hops * t_ser keeps the collated rate bounded by
        # what the path could actually carry when queues are empty
        self._ser_s = max(TICK_S, params.data_size * 8 / bitrate)
        self.delay_floor = self._ser_s
        self.d_collated: Optional[float] = None
        self._collated_n = 0
        self.r_last: Optional[float] = None
        self.received = SeqIntervals()
        self.max_seq = -1
        self.data_since_ack = 0
        self.last_ack_tick = 0
        self.last_route: Optional[Tuple[int, ...]] = None
        self.acks_sent = 0
        self._warned_unstamped = False
        self._route_epoch = 0
        self._epoch_ticks = seconds_to_ticks(params.epoch_s, "epoch")
        self._min_gap_ticks = seconds_to_ticks(params.drf_min_interval_s,
                                               "drf_min_interval")
        self._warm_gap_ticks = max(1, self._min_gap_ticks // 2)
        # the reporting threshold is the receiver's single chattiness
        # parameter: a tight threshold also advertises repair state (loss
        # and gap-fill SACKs) more often, a loose one sits on losses longer
        self._repair_gap_ticks = seconds_to_ticks(
            params.drf_threshold * params.repair_budget_s, "repair_gap")
        self._warmup_ticks = seconds_to_ticks(params.drf_warmup_s,
                                              "drf_warmup")
        self._fresh_until = 0

    def start(self) -> None:
        if self.mode == "atp":
            self.sim.schedule_in(self._epoch_ticks, self._epoch_check)

    def _clamped(self, delay: float) -> float:
        # a zero stamp is legitimate on an idle path (no queueing or
        # contention yet); the floor keeps 1/delay physically meaningful
        if delay <= 0 and not self._warned_unstamped:
            log.debug("flow %d: zero delay stamp, clamping to floor",
                      self.flow)
            self._warned_unstamped = True
        return max(delay, self.delay_floor)

    def on_probe(self, pkt: Packet) -> None:
        # a probe re-initializes collation only when it rode a new route;
        # a liveness probe on the same path must not discard the smoothed
        # estimate, or its reply would kick off a burst of change feedback
        fresh = pkt.route != self.last_route or self.d_collated is None
        self.last_route = pkt.route
        self.delay_floor = max(len(pkt.route) - 1, 1) * self._ser_s
        if fresh:
            self.d_collated = self._clamped(pkt.congestion_delay)
            self._collated_n = 1
            # while the estimate re-converges on the new path, change
            # feedback may fire on a much shorter sub-interval: the sender's
            # rate is provisional and needs prompt correction
            self._fresh_until = self.sim.now + self._warmup_ticks
            # after an outage the sender needs the receiver's reception
            # state promptly to recover break-lost packets, so a short
            # burst of reconnect reports re-advertises the SACK state at a
            # fixed spacing until the flow stabilizes on the new path
            self._route_epoch += 1
            if self.mode == "drf" and self.p.reconnect_reports > 0:
                epoch = self._route_epoch
                gap = seconds_to_ticks(self.p.reconnect_report_gap_s,
                                       "reconnect_report_gap")
                for i in range(1, self.p.reconnect_reports + 1):
                    self.sim.schedule_in(
                        i * gap,
                        lambda e=epoch: self._reconnect_report(e))
        self.sim.log.add(self.sim.now, "rate_sample", self.dst, self.flow,
                         value=1.0 / self.d_collated)
        self._send_ack("probe")

    def on_data(self, pkt: Packet) -> None:
        self.last_route = pkt.route
        self.delay_floor = max(len(pkt.route) - 1, 1) * self._ser_s
        delay = self._clamped(pkt.congestion_delay)
        # asymmetric smoothing: worsening delay is tracked quickly (the
        # sender should throttle promptly), improving delay decays slowly so
        # queueing noise cannot oscillate R across the feedback threshold;
        # the (n-1)/n warm-up lets a freshly re-routed flow converge to the
        # new path's delay in a few packets regardless of either weight
        self._collated_n += 1
        if self.d_collated is not None and delay > self.d_collated:
            bound = self.p.alpha_r_up
        else:
            bound = self.p.alpha_r
        alpha_eff = min(bound, (self._collated_n - 1) / self._collated_n)
        self.d_collated = collate_delay(self.d_collated, delay, alpha_eff)
        r = 1.0 / self.d_collated
        self.sim.log.add(self.sim.now, "rate_sample", self.dst, self.flow,
                         value=r)
        new = self.received.add(pkt.seq)
        loss = new and detect_loss(self.max_seq, pkt.seq)
        if new:
            if pkt.seq > self.max_seq:
                self.max_seq = pkt.seq
            self.sim.log.add(self.sim.now, "app_deliver", self.dst, self.flow,
                             DATA, pkt.seq)
        self.data_since_ack += 1
        if self.mode == "drf":
            # feedback is rate-limited so a swinging estimate cannot
            # out-chat the epoch baseline; while the estimate re-converges
            # after a route change the limit is relaxed, because the
            # sender's rate is provisional and needs prompt correction
            warm = self.sim.now < self._fresh_until
            change_gap = self._warm_gap_ticks if warm else self._min_gap_ticks
            repair_gap = self._warm_gap_ticks if warm else self._repair_gap_ticks
            since_ack = self.sim.now - self.last_ack_tick
            gate_open = since_ack >= change_gap
            repair_open = since_ack >= repair_gap
            if self.r_last is None:
                self._send_ack("first")
            elif loss:
                if repair_open:
                    self._send_ack("drf_loss")
            elif new and pkt.seq < self.max_seq:
                if len(self.received.blocks()) == 1:
                    # the retransmission that closes the last gap is always
                    # acknowledged: the sender can release its whole buffer
                    self._send_ack("drf_fill")
                elif repair_open:
                    # a partial fill reports the SACK state at most once per
                    # repair window
                    self._send_ack("drf_fill")
            elif (abs(r - self.r_last) >= self.p.drf_threshold * self.r_last
                  and gate_open):
                self._send_ack("drf_change")
        else:
            if loss and self.data_since_ack >= self.p.sack_cadence:
                self._send_ack("epoch_loss")

    def _reconnect_report(self, epoch: int) -> None:
        # stale reports from a superseded route are dropped; a report with
        # nothing received yet has no state to advertise
        if epoch != self._route_epoch or self.max_seq < 0:
            return
        self._send_ack("reconnect")

    def _epoch_check(self) -> None:
        # a flow that received nothing this epoch stays silent; the sender's
        # liveness rule, not the receiver, is responsible for dead paths
        self.sim.schedule_in(self._epoch_ticks, self._epoch_check)
        if self.data_since_ack > 0 and self.sim.now - self.last_ack_tick >= self._epoch_ticks:
            self._send_ack("epoch")

    def _send_ack(self, trigger: str) -> None:
        r = 1.0 / self.d_collated
        blocks = self.received.blocks()
        sack = build_sack(blocks, self.p.max_sack_blocks) if blocks else ()
        route = tuple(reversed(self.last_route))
        pkt = Packet(ACK_RATE, self.flow, size=self.p.ack_size,
                     rate_feedback=r, sack_blocks=sack, route=route,
                     trigger=trigger)
        self.sim.log.add(self.sim.now, "ack_sent", self.dst, self.flow,
                         ACK_RATE, -1, self.p.ack_size, trigger)
        if trigger != "reconnect":
            # the reconnect report is pure recovery state: the probe reply's
            # rate stays the reference for change detection on the new path,
            # and the change-feedback limiter keeps running so the report
            # does not delay the first correction over the new path
            self.r_last = r
            self.last_ack_tick = self.sim.now
        self.data_since_ack = 0
        self.acks_sent += 1
        self.world.medium.enqueue(self.dst, pkt, route[1])
