"""Shortest-hop routing over the instantaneous connectivity graph.

Route discovery floods are abstracted away: the router computes a BFS
shortest path over global knowledge of node positions, and the caller
charges a one-round-trip latency/energy cost for the discovery (see
Medium.charge_control_round_trip).  Ties are broken by expanding neighbors
in ascending node id, so identical graphs always yield identical routes.
"""

from __future__ import annotations

from collections import deque
from typing import Optional, Tuple


class Router:
    def __init__(self, mobility, node_count: int, tx_range: float):
        self.mobility = mobility
        self.node_count = node_count
        self.tx_range = tx_range

    def find_route(self, src: int, dst: int, tick: int) -> Optional[Tuple[int, ...]]:
        """BFS shortest-hop path src..dst at time `tick`, or None."""
        if src == dst:
            return (src,)
        n = self.node_count
        pos = [self.mobility.position(i, tick) for i in range(n)]
        limit2 = self.tx_range * self.tx_range
        parent = {src: -1}
        frontier = deque([src])
        while frontier:
            u = frontier.popleft()
            ux, uy = pos[u]
            for v in range(n):
                if v in parent:
                    continue
                dx = pos[v][0] - ux
                dy = pos[v][1] - uy
                if dx * dx + dy * dy <= limit2:
                    parent[v] = u
                    if v == dst:
                        hops = [dst]
                        while hops[-1] != src:
                            hops.append(parent[hops[-1]])
                        hops.reverse()
                        return tuple(hops)
                    frontier.append(v)
        return None
