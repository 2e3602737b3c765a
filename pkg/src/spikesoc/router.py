"""Star-topology unicast event router.

The router owns no state beyond an immutable route table: producers attach
the destination header and apply channel shifts, the router checks the
header against the source's configured destinations, strips it, and
delivers the payload.  Per (source, destination) pair the delivery order
equals the emission order; cross-source interleaving at a shared
destination is decided by the engine's global FIFO.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

from .config import NetworkConfig
from .events import FeatureEvent, MONITOR, PREPROC, READOUT, core_port


class RoutingFaultError(ValueError):
    """An event carried a destination header its source is not wired to."""

    def __init__(self, source: str, header: Optional[str], event: FeatureEvent):
        self.source = source
        self.header = header
        self.event = event
        super().__init__(f"routing fault at {source}: no route to {header!r} for {event}")


class Delivery(NamedTuple):
    port: str
    payload: FeatureEvent


@dataclass(frozen=True)
class RouteTable:
    """Per source port: the configured (destination port, channel shift) pairs."""

    routes: dict[str, tuple[tuple[str, int], ...]]

    def ports(self) -> list[str]:
        seen = dict.fromkeys(self.routes)
        for dests in self.routes.values():
            for port, _ in dests:
                seen.setdefault(port, None)
        return list(seen)

    def destinations(self, source: str) -> tuple[tuple[str, int], ...]:
        return self.routes.get(source, ())

    def dump(self) -> str:
        lines = []
        for src, dests in self.routes.items():
            rendered = ", ".join(f"{p} (shift {s})" for p, s in dests) or "-"
            lines.append(f"{src:>8} -> {rendered}")
        return "\n".join(lines)


def build_route_table(net: NetworkConfig) -> RouteTable:
    routes: dict[str, tuple[tuple[str, int], ...]] = {}
    routes[PREPROC] = tuple((d.target, d.channel_shift) for d in net.preproc.destinations)
    if net.preproc.monitor_tap:
        routes[PREPROC] = routes[PREPROC] + ((MONITOR, 0),)
    for layer in net.layers:
        routes[core_port(layer.core_id)] = tuple(
            (d.target, d.channel_shift) for d in layer.destinations)
    routes.setdefault(READOUT, ())
    return RouteTable(routes)


def route(source: str, event: FeatureEvent, table: RouteTable) -> Delivery:
    """Deliver one emitted event: check the header, strip it, hand over."""
    dest = event.dest
    if dest is None or all(dest != port for port, _ in table.destinations(source)):
        raise RoutingFaultError(source, dest, event)
    return Delivery(dest, event.stripped())


def find_cycle(table: RouteTable) -> Optional[list[str]]:
    """Return one cycle of port names, or None when the graph is acyclic."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {port: WHITE for port in table.ports()}
    stack: list[str] = []

    def visit(node: str) -> Optional[list[str]]:
        color[node] = GREY
        stack.append(node)
        for nxt, _ in table.destinations(node):
            if color.get(nxt, WHITE) == GREY:
                return stack[stack.index(nxt):]
            if color.get(nxt, WHITE) == WHITE:
                found = visit(nxt)
                if found is not None:
                    return found
        stack.pop()
        color[node] = BLACK
        return None

    for port in list(color):
        if color[port] == WHITE:
            found = visit(port)
            if found is not None:
                return found
    return None


def check_feedforward(table: RouteTable) -> None:
    """Raise unless the port graph is acyclic (recurrent wiring would
    deadlock the non-blocking routing scheme)."""
    cycle = find_cycle(table)
    if cycle is not None:
        raise ValueError(f"recurrent topology: cycle {' -> '.join(cycle)}")


__all__ = [
    "Delivery", "RouteTable", "RoutingFaultError", "build_route_table",
    "check_feedforward", "find_cycle", "route",
]
