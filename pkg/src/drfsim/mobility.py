"""Random-waypoint motion of nodes on a rectangular grid.

Every node moves at the single scenario speed toward targets drawn uniformly
over the grid, with zero pause at each waypoint.  Each node consumes its own
RNG stream, so the waypoint sequence of node i depends only on (seed, i) and
is identical across protocol variants sharing a seed.
"""

from __future__ import annotations

import hashlib
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .core import TICKS_PER_SECOND, RngStream

Position = Tuple[float, float]


def distance(a: Position, b: Position) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass
class Leg:
    """One straight waypoint-to-waypoint segment at constant speed."""

    origin: Position
    target: Position
    depart: int  # tick
    arrive: int  # tick (>= depart)


class RandomWaypointModel:
    def __init__(
        self,
        node_count: int,
        width: float,
        height: float,
        speed: float,
        seed: int,
        initial_positions: Optional[Sequence[Position]] = None,
    ):
        if node_count < 1:
            raise ValueError("node_count must be >= 1")
        if speed < 0:
            raise ValueError("speed must be >= 0")
        self.node_count = node_count
        self.width = width
        self.height = height
        self.speed = speed
        self._rngs = [RngStream(seed, f"mobility/{i}") for i in range(node_count)]
        self._legs: List[List[Leg]] = []
        self._arrivals: List[List[int]] = []  # per node, arrive tick of each leg
        for i in range(node_count):
            if initial_positions is not None:
                start = initial_positions[i]
            else:
                rng = self._rngs[i]
                start = (rng.uniform(0.0, width), rng.uniform(0.0, height))
            self._legs.append([Leg(start, start, 0, 0)])
            self._arrivals.append([0])

    def _next_leg(self, node: int) -> Leg:
        prev = self._legs[node][-1]
        rng = self._rngs[node]
        target = (rng.uniform(0.0, self.width), rng.uniform(0.0, self.height))
        dist = distance(prev.target, target)
        travel = round(dist / self.speed * TICKS_PER_SECOND)
        leg = Leg(prev.target, target, prev.arrive, prev.arrive + max(travel, 1))
        self._legs[node].append(leg)
        self._arrivals[node].append(leg.arrive)
        return leg

    def _leg_at(self, node: int, tick: int) -> Leg:
        if self.speed == 0.0:
            return self._legs[node][0]
        while self._arrivals[node][-1] < tick:
            self._next_leg(node)
        idx = bisect_right(self._arrivals[node], tick)
        legs = self._legs[node]
        return legs[idx] if idx < len(legs) else legs[-1]

    def position(self, node: int, tick: int) -> Position:
        """Linearly interpolated position of `node` at `tick`."""
        leg = self._leg_at(node, tick)
        if tick >= leg.arrive or leg.origin == leg.target:
            return leg.target
        frac = (tick - leg.depart) / (leg.arrive - leg.depart)
        ox, oy = leg.origin
        tx, ty = leg.target
        return (ox + (tx - ox) * frac, oy + (ty - oy) * frac)

    def trace_hash(self, end_tick: int) -> str:
        """Hash of every waypoint leg overlapping [0, end_tick], all nodes.

        Used by the sweep harness to verify that matched-seed runs of
        different protocols really shared one mobility realization.
        """
        h = hashlib.sha256()
        for node in range(self.node_count):
            if self.speed > 0.0:
                while self._arrivals[node][-1] < end_tick:
                    self._next_leg(node)
            for leg in self._legs[node]:
                h.update(
                    f"{node},{leg.origin!r},{leg.target!r},{leg.depart},{leg.arrive};".encode()
                )
                if leg.depart > end_tick:
                    break
        return h.hexdigest()[:16]
