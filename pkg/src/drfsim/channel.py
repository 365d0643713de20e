"""Simplified shared-medium PHY/MAC with energy accounting.

The MAC is wait-for-idle carrier sense, not full 802.11 DCF: a node with a
head-of-queue packet transmits immediately if no other node within its
interference range is transmitting, otherwise it re-tries one jitter slot
after the blocking transmission ends.  Because grants are processed one
event at a time, at most one transmitter is ever active in any interference
neighborhood.  Energy is charged only for transmission and reception.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .core import MILLISECOND, TICKS_PER_SECOND, seconds_to_ticks


@dataclass
class RadioParams:
    tx_range: float = 200.0
    interference_range: float = 500.0
    bitrate: int = 2_000_000
    prop_delay_s: float = 2.5e-6
    tx_power: float = 0.660  # watts, classic WaveLAN figures
    rx_power: float = 0.395

    def __post_init__(self):
        if self.tx_range <= 0 or self.interference_range <= 0:
            raise ValueError("radio ranges must be positive")
        if self.tx_range > self.interference_range:
            raise ValueError("tx_range must not exceed interference_range")
        if self.bitrate <= 0 or self.tx_power <= 0 or self.rx_power <= 0:
            raise ValueError("bitrate and powers must be positive")
        if self.prop_delay_s <= 0:
            raise ValueError("prop_delay_s must be positive")
        self.prop_delay_ticks = seconds_to_ticks(self.prop_delay_s, "prop_delay")


def tx_duration_s(size_bytes: int, bitrate: int) -> float:
    """Serialization time in seconds of a packet of `size_bytes`."""
    if size_bytes <= 0:
        raise ValueError(f"packet size must be positive, got {size_bytes}")
    return size_bytes * 8 / bitrate


def tx_duration_ticks(size_bytes: int, bitrate: int) -> int:
    """Serialization time rounded to the nearest clock tick, at least 1."""
    if size_bytes <= 0:
        raise ValueError(f"packet size must be positive, got {size_bytes}")
    num = size_bytes * 8 * TICKS_PER_SECOND
    return max(1, (2 * num + bitrate) // (2 * bitrate))


def can_receive(a, b, tx_range: float) -> bool:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return dx * dx + dy * dy <= tx_range * tx_range


@dataclass
class EnergyLedger:
    e_tx: float = 0.0
    e_rx: float = 0.0

    @property
    def total(self) -> float:
        return self.e_tx + self.e_rx


@dataclass
class _Mac:
    """Per-node outbound FIFO with drop-tail overflow."""

    node: int
    queue: deque = field(default_factory=deque)  # [pkt, next_hop, enqueue_tick]
    head_start: int = 0
    attempt: int = 0  # token invalidating stale contention retries
    sending: bool = False


class _BroadcastCtrl:
    """Unaddressed control broadcast; costs channel time and tx energy."""

    __slots__ = ("kind", "flow", "seq", "size", "congestion_delay")

    def __init__(self, flow: int, size: int):
        self.kind = "RREQ"
        self.flow = flow
        self.seq = -1
        self.size = size
        self.congestion_delay = 0.0


class Medium:
    """The shared radio channel joining all node MACs.

    Callbacks wired by the surrounding world:
      on_transmit_start(node, pkt, q_s, c_s)  -- delay measurement / stamping
      on_receive(node, pkt)                   -- delivery to the network layer
      on_link_break(node, pkt)                -- next hop out of range
    """

    def __init__(self, sim, mobility, radio: RadioParams, node_count: int,
                 queue_capacity: int, jitter_rng, loss_rng=None, loss_rate: float = 0.0):
        self.sim = sim
        self.mobility = mobility
        self.radio = radio
        self.queue_capacity = queue_capacity
        self.jitter_rng = jitter_rng
        self.loss_rng = loss_rng
        self.loss_rate = loss_rate
        self.macs = [_Mac(i) for i in range(node_count)]
        self.ledgers = [EnergyLedger() for _ in range(node_count)]
        self.active: dict[int, int] = {}  # transmitting node -> end tick
        self.on_transmit_start = lambda node, pkt, q_s, c_s: None
        self.on_receive = lambda node, pkt: None
        self.on_link_break = lambda node, pkt: None

    # -- queueing --------------------------------------------------------

    def enqueue(self, node: int, pkt, next_hop: int) -> bool:
        mac = self.macs[node]
        if len(mac.queue) >= self.queue_capacity:
            self.sim.log.add(self.sim.now, "drop", node, pkt.flow, pkt.kind,
                             pkt.seq, pkt.size, "queue_full")
            return False
        mac.queue.append((pkt, next_hop, self.sim.now))
        if not mac.sending and len(mac.queue) == 1:
            self._start_head(mac)
        return True

    def _start_head(self, mac: _Mac, defer: bool = False) -> None:
        mac.head_start = self.sim.now
        mac.attempt += 1
        if defer:
            # back-to-back sends must re-contend after a jitter slot, or a
            # busy node would capture the channel and starve its neighbors
            token = mac.attempt
            retry = self.sim.now + 1 + self.jitter_rng.randrange(MILLISECOND)
            self.sim.schedule_at(retry, lambda: self._contend(mac, token))
        else:
            self._contend(mac, mac.attempt)

    # -- carrier sense ----------------------------------------------------

    def _contend(self, mac: _Mac, token: int) -> None:
        if token != mac.attempt or not mac.queue:
            return
        now = self.sim.now
        pos = self.mobility.position(mac.node, now)
        busy_until = 0
        limit = self.radio.interference_range
        limit2 = limit * limit
        for other, end in self.active.items():
            opos = self.mobility.position(other, now)
            dx = pos[0] - opos[0]
            dy = pos[1] - opos[1]
            if dx * dx + dy * dy <= limit2 and end > busy_until:
                busy_until = end
        if busy_until == 0:
            self._grant(mac)
        else:
            # jitter slot in (0, 1 ms] breaks simultaneous re-requests
            retry = busy_until + 1 + self.jitter_rng.randrange(MILLISECOND)
            self.sim.schedule_at(retry, lambda: self._contend(mac, token))

    def _grant(self, mac: _Mac) -> None:
        sim = self.sim
        now = sim.now
        pkt, next_hop, enq_tick = mac.queue[0]
        q_s = (mac.head_start - enq_tick) / TICKS_PER_SECOND
        c_s = (now - mac.head_start) / TICKS_PER_SECOND
        dur = tx_duration_ticks(pkt.size, self.radio.bitrate)
        end = now + dur
        mac.sending = True
        self.active[mac.node] = end
        self.ledgers[mac.node].e_tx += self.radio.tx_power * (dur / TICKS_PER_SECOND)
        self.on_transmit_start(mac.node, pkt, q_s, c_s)
        sim.log.add(now, "tx", mac.node, pkt.flow, pkt.kind, pkt.seq, pkt.size,
                    pkt.congestion_delay)
        sim.schedule_at(end, lambda: self._end_tx(mac))
        sim.schedule_at(end + self.radio.prop_delay_ticks,
                        lambda: self._deliver(mac.node, pkt, next_hop, dur))

    def _end_tx(self, mac: _Mac) -> None:
        del self.active[mac.node]
        mac.sending = False
        mac.queue.popleft()
        if mac.queue:
            self._start_head(mac, defer=True)

    def _deliver(self, src: int, pkt, next_hop: int, dur: int) -> None:
        if next_hop < 0:
            # broadcast control traffic is addressed to no one; it exists
            # for its channel occupancy and transmit energy
            return
        sim = self.sim
        now = sim.now
        spos = self.mobility.position(src, now)
        dpos = self.mobility.position(next_hop, now)
        if not can_receive(spos, dpos, self.radio.tx_range):
            sim.log.add(now, "drop", src, pkt.flow, pkt.kind, pkt.seq, pkt.size,
                        "linkbreak")
            self.on_link_break(src, pkt)
            return
        if self.loss_rate and self.loss_rng.random() < self.loss_rate:
            sim.log.add(now, "drop", src, pkt.flow, pkt.kind, pkt.seq, pkt.size,
                        "loss")
            return
        self.ledgers[next_hop].e_rx += self.radio.rx_power * (dur / TICKS_PER_SECOND)
        sim.log.add(now, "rx", next_hop, pkt.flow, pkt.kind, pkt.seq, pkt.size,
                    pkt.congestion_delay)
        self.on_receive(next_hop, pkt)

    # -- abstracted control traffic ---------------------------------------

    def flood_control(self, size_bytes: int, flow: int) -> None:
        """Queue one discovery-request rebroadcast at every node.

        A route discovery floods the request network-wide: each node takes
        one real channel grant for a `size_bytes` broadcast.  The broadcasts
        are addressed to no receiver — their cost is the channel time and
        transmit energy they consume, which is what makes route churn
        expensive when the channel is loaded.
        """
        for node in range(len(self.macs)):
            self.enqueue(node, _BroadcastCtrl(flow, size_bytes), -1)

    def charge_control_round_trip(self, path, size_bytes: int, flow: int) -> int:
        """Charge energy/latency for request+reply control packets over `path`.

        Stands in for route-discovery traffic: each directed hop is charged
        one transmission and one reception of a `size_bytes` packet in both
        directions, without occupying the channel.  Returns the round-trip
        latency in ticks.
        """
        dur = tx_duration_ticks(size_bytes, self.radio.bitrate)
        dur_s = dur / TICKS_PER_SECOND
        now = self.sim.now
        for a, b in zip(path, path[1:]):
            for tx_node, rx_node in ((a, b), (b, a)):
                self.ledgers[tx_node].e_tx += self.radio.tx_power * dur_s
                self.ledgers[rx_node].e_rx += self.radio.rx_power * dur_s
                self.sim.log.add(now, "ctrl", tx_node, flow, "CTRL", -1,
                                 size_bytes, float(rx_node))
        return 2 * (len(path) - 1) * (dur + self.radio.prop_delay_ticks)
