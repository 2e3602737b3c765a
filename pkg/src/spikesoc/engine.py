"""Deterministic event-driven execution of the whole pipeline.

Reference semantics: a single global FIFO work queue.  Each input event or
tick is injected at its timestamp and every event it derives is appended in
the deterministic order defined by the producing block, then drained fully
before the next stimulus.  Stimuli at equal timestamps are ordered input
events first, then leak ticks, then readout ticks (state settles before
sampling).  Two runs with identical inputs, configuration and seed produce
byte-identical traces.

Routing faults and malformed events are recorded in the trace and counted;
they never abort a run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .config import NetworkConfig
from .convcore import CoreState
from .events import (
    FeatureEvent,
    MalformedEventError,
    MONITOR,
    PixelEvent,
    PREPROC,
    READOUT,
    core_port,
)
from .preproc import map_sources, monitor_copy, preprocess_stages
from .readout import ReadoutCore, ReadoutOutput
from .router import RoutingFaultError, build_route_table, route


@dataclass(frozen=True)
class TickSchedule:
    """External time reference: optional leak and readout tick periods in
    microseconds, plus an optional horizon.  Without a horizon, ticks stop
    at the last input event's timestamp."""

    readout_period_us: Optional[int] = None
    leak_period_us: Optional[int] = None
    horizon_us: Optional[int] = None

    def __post_init__(self) -> None:
        for name in ("readout_period_us", "leak_period_us", "horizon_us"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive")


_PRIO_LEAK = 1
_PRIO_READOUT = 2


class SimTrace:
    """Run ledger: optional per-hop records plus always-on counters."""

    def __init__(self, collect_records: bool = False):
        self.records: Optional[list[dict]] = [] if collect_records else None
        self.events_in = 0
        self.malformed = 0
        self.preproc_dropped = 0
        self.faults = 0
        self.readout_dropped = 0
        self.emitted: dict[str, int] = {}
        self.delivered: dict[str, int] = {}
        self.core_stats: dict[str, dict[str, int]] = {}
        self.readout_ticks = 0
        self.leak_ticks = 0
        self.duration_us = 0

    def record(self, **fields) -> None:
        if self.records is not None:
            self.records.append(fields)

    def total_emitted(self) -> int:
        return sum(self.emitted.values())

    def total_delivered(self) -> int:
        return sum(self.delivered.values())

    def summary(self) -> dict:
        return {
            "kind": "summary",
            "events_in": self.events_in,
            "malformed": self.malformed,
            "preproc_dropped": self.preproc_dropped,
            "faults": self.faults,
            "readout_dropped": self.readout_dropped,
            "emitted": dict(sorted(self.emitted.items())),
            "delivered": dict(sorted(self.delivered.items())),
            "cores": {port: dict(stats) for port, stats in sorted(self.core_stats.items())},
            "readout_ticks": self.readout_ticks,
            "leak_ticks": self.leak_ticks,
            "duration_us": self.duration_us,
        }

    def lines(self) -> Iterator[str]:
        if self.records is not None:
            for rec in self.records:
                yield json.dumps(rec, sort_keys=True, separators=(",", ":"))
        yield json.dumps(self.summary(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        h = hashlib.sha256()
        for line in self.lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()


@dataclass
class SimResult:
    outputs: list[ReadoutOutput]
    trace: SimTrace
    cores: dict[str, CoreState]
    readout: ReadoutCore


def _tick_stream(ticks: TickSchedule) -> Iterator[tuple[int, int]]:
    """Merged (time, priority) tick stream, unbounded; the caller decides
    where to stop."""
    next_leak = ticks.leak_period_us
    next_readout = ticks.readout_period_us
    while next_leak is not None or next_readout is not None:
        if next_readout is None or (next_leak is not None
                                    and (next_leak, _PRIO_LEAK) <= (next_readout, _PRIO_READOUT)):
            yield next_leak, _PRIO_LEAK
            next_leak += ticks.leak_period_us
        else:
            yield next_readout, _PRIO_READOUT
            next_readout += ticks.readout_period_us


def run(net: NetworkConfig, events: Iterable[PixelEvent],
        ticks: Optional[TickSchedule] = None, *,
        collect_trace: bool = False, seed: int = 0,
        backend=None) -> SimResult:
    """Execute the pipeline over a sorted input event stream.

    Precondition: the configuration passed validation.  Input timestamps
    must be non-decreasing.
    """
    ticks = ticks if ticks is not None else TickSchedule()
    trace = SimTrace(collect_trace)
    table = build_route_table(net)
    cores = {
        core_port(layer.core_id): CoreState.from_layer(
            layer, default_seed=seed + layer.core_id, backend=backend)
        for layer in net.layers
    }
    leak_ports = [core_port(l.core_id) for l in sorted(net.layers, key=lambda l: l.core_id)
                  if l.leak_enabled]
    readout = ReadoutCore(net.readout)
    outputs: list[ReadoutOutput] = []
    queue: list[tuple[str, FeatureEvent]] = []

    def emit(src: str, event: FeatureEvent, t: int) -> None:
        trace.emitted[src] = trace.emitted.get(src, 0) + 1
        try:
            delivery = route(src, event, table)
        except RoutingFaultError as exc:
            trace.faults += 1
            trace.record(kind="fault", t=t, src=src, detail=str(exc))
            return
        trace.record(kind="route", t=t, src=src, dst=delivery.port,
                     c=event.c, x=event.x, y=event.y)
        queue.append(delivery)

    def drain(t: int) -> None:
        head = 0
        while head < len(queue):
            port, fe = queue[head]
            head += 1
            trace.delivered[port] = trace.delivered.get(port, 0) + 1
            if port in cores:
                core = cores[port]
                sp0, up0 = core.spikes, core.updates
                try:
                    derived = core.process_event(fe)
                except MalformedEventError as exc:
                    trace.faults += 1
                    trace.record(kind="fault", t=t, src=port, detail=str(exc))
                    continue
                trace.record(kind="core", t=t, port=port, c=fe.c, x=fe.x, y=fe.y,
                             spikes=core.spikes - sp0, updates=core.updates - up0)
                for em in derived:
                    emit(port, em, t)
            elif port == READOUT:
                if not readout.accumulate(fe.c):
                    trace.readout_dropped += 1
                    trace.record(kind="fault", t=t, src=READOUT,
                                 detail=f"class {fe.c} outside 0..{readout.n_classes - 1}")
            elif port == MONITOR:
                pass
        queue.clear()

    def inject_event(ev: PixelEvent) -> None:
        trace.events_in += 1
        trace.record(kind="input", t=ev.t, x=ev.x, y=ev.y, p=ev.p)
        try:
            fe = preprocess_stages(ev, net.preproc)
        except MalformedEventError as exc:
            trace.malformed += 1
            trace.record(kind="fault", t=ev.t, src=PREPROC, detail=str(exc))
            return
        if fe is None:
            trace.preproc_dropped += 1
            return
        for em in map_sources(fe, net.preproc):
            emit(PREPROC, em, ev.t)
        if net.preproc.monitor_tap:
            emit(PREPROC, monitor_copy(fe), ev.t)
        drain(ev.t)

    def fire_tick(t: int, prio: int) -> None:
        if prio == _PRIO_LEAK:
            trace.leak_ticks += 1
            for port in leak_ports:
                core = cores[port]
                sp0, up0 = core.spikes, core.updates
                derived = core.leak_tick()
                trace.record(kind="leak", t=t, port=port,
                             spikes=core.spikes - sp0, updates=core.updates - up0)
                for em in derived:
                    emit(port, em, t)
            drain(t)
        else:
            trace.readout_ticks += 1
            out = readout.on_tick()
            outputs.append(out)
            trace.record(kind="readout", t=t, tick=out.tick_index,
                         values=list(out.values), den=out.denominator,
                         flags=[int(f) for f in out.over_threshold],
                         max_class=out.max_class)

    tick_iter = _tick_stream(ticks)
    pending = next(tick_iter, None)
    last_t = 0
    prev_t: Optional[int] = None
    for ev in events:
        if prev_t is not None and ev.t < prev_t:
            raise ValueError(f"input timestamps not sorted: {ev.t} after {prev_t}")
        prev_t = ev.t
        while pending is not None and pending[0] < ev.t:
            if ticks.horizon_us is not None and pending[0] > ticks.horizon_us:
                pending = None
                break
            fire_tick(*pending)
            last_t = pending[0]
            pending = next(tick_iter, None)
        inject_event(ev)
        last_t = max(last_t, ev.t)

    horizon = ticks.horizon_us if ticks.horizon_us is not None else (
        prev_t if prev_t is not None else 0)
    while pending is not None and pending[0] <= horizon:
        fire_tick(*pending)
        last_t = max(last_t, pending[0])
        pending = next(tick_iter, None)

    trace.duration_us = max(last_t, horizon)
    for port, core in sorted(cores.items()):
        trace.core_stats[port] = {
            "events_in": core.events_in,
            "updates": core.updates,
            "spikes": core.spikes,
        }
    return SimResult(outputs=outputs, trace=trace, cores=cores, readout=readout)


__all__ = ["SimResult", "SimTrace", "TickSchedule", "run"]
