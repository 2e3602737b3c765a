"""Latency and throughput accounting.

End-to-end latency is modeled affinely from two measured calibration
points of the modeled chip: a fixed pipeline overhead plus a
per-convolution-core term (1357.5 ns + n * 222.5 ns reproduces 1.58 us
through one core and 3.36 us through nine).  Pooling rides inside the conv
cores and adds nothing.  Throughput is limited by the neuron compute units
at one update per service interval (33.3 ns, about 30 M updates/s per
unit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .config import NetworkConfig
from .events import MONITOR, PREPROC, READOUT, is_core_port
from .router import build_route_table


@dataclass(frozen=True)
class TimingModel:
    fixed_pipeline_overhead_ns: float = 1357.5
    per_layer_latency_ns: float = 222.5
    neuron_unit_service_ns: float = 33.3
    units_per_core: int = 1

    def __post_init__(self) -> None:
        for name in ("fixed_pipeline_overhead_ns", "per_layer_latency_ns",
                     "neuron_unit_service_ns"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.units_per_core < 1:
            raise ValueError("units_per_core must be positive")


def estimate_latency(net: Optional[NetworkConfig], model: TimingModel,
                     path: Sequence[str]) -> float:
    """Latency in nanoseconds of one event along a port path.

    The path must follow configured routes (when `net` is given) and runs
    from the entry port to the exit port; only convolution cores on the
    path contribute the per-layer term.
    """
    if not path:
        raise ValueError("empty path")
    table = build_route_table(net) if net is not None else None
    if table is not None:
        for src, dst in zip(path, path[1:]):
            if all(dst != port for port, _ in table.destinations(src)):
                raise ValueError(f"path hop {src} -> {dst} is not a configured route")
    cores = sum(1 for port in path if is_core_port(port))
    return model.fixed_pipeline_overhead_ns + model.per_layer_latency_ns * cores


def longest_path(net: NetworkConfig) -> list[str]:
    """Port path from preproc crossing the most conv cores, preferring paths
    that reach the readout.  The port graph is tiny, so plain DFS is fine."""
    table = build_route_table(net)
    best: list[str] = [PREPROC]

    def rank(chain: list[str]) -> tuple[bool, int, int]:
        return (chain[-1] == READOUT, _core_count(chain), len(chain))

    def walk(chain: list[str]) -> None:
        nonlocal best
        if rank(chain) > rank(best):
            best = list(chain)
        for nxt, _ in table.destinations(chain[-1]):
            if nxt == MONITOR or nxt in chain:
                continue
            chain.append(nxt)
            walk(chain)
            chain.pop()

    walk([PREPROC])
    return best


def _core_count(path: Sequence[str]) -> int:
    return sum(1 for p in path if is_core_port(p))


def all_paths(net: NetworkConfig) -> list[list[str]]:
    """Every simple port path from preproc to the readout."""
    table = build_route_table(net)
    found: list[list[str]] = []

    def walk(chain: list[str]) -> None:
        if chain[-1] == READOUT:
            found.append(list(chain))
            return
        for nxt, _ in table.destinations(chain[-1]):
            if nxt == MONITOR or nxt in chain:
                continue
            chain.append(nxt)
            walk(chain)
            chain.pop()

    walk([PREPROC])
    return found


def latency_distribution(net: NetworkConfig, model: TimingModel,
                         trace=None) -> dict[str, float]:
    """Estimated latency in nanoseconds for every preproc-to-readout path.

    With a trace, each path's figure adds the queueing wait of the cores it
    crosses (from the throughput model); without one it is the pure affine
    estimate."""
    waits: dict[str, float] = {}
    if trace is not None and trace.core_stats and trace.duration_us > 0:
        report = account_throughput(trace, model=model)
        waits = {load.port: load.queue_wait_ns for load in report.loads}
    out = {}
    for path in all_paths(net):
        ns = estimate_latency(net, model, path)
        ns += sum(waits.get(port, 0.0) for port in path)
        out[" -> ".join(path)] = ns
    return out


@dataclass(frozen=True)
class UnitLoad:
    port: str
    updates: int
    offered_rate_hz: float      # updates per second offered to one unit
    utilization: float          # busy time over elapsed time, may exceed 1
    saturated: bool
    queue_wait_ns: float        # single-server FIFO approximation; inf when saturated


@dataclass(frozen=True)
class ThroughputReport:
    duration_us: int
    loads: tuple[UnitLoad, ...]

    def __str__(self) -> str:
        lines = [f"throughput over {self.duration_us} us:"]
        for load in self.loads:
            flag = "  SATURATED" if load.saturated else ""
            wait = ("inf" if math.isinf(load.queue_wait_ns)
                    else f"{load.queue_wait_ns:.1f}")
            lines.append(
                f"  {load.port:>8}: {load.updates} updates, utilization "
                f"{load.utilization:.3f}, queue wait {wait} ns{flag}")
        return "\n".join(lines)


def account_throughput(updates_per_core, duration_us: Optional[int] = None,
                       model: Optional[TimingModel] = None) -> ThroughputReport:
    """Per-core neuron unit load from the update counts of a run.

    Accepts either a mapping {port: updates} plus an explicit duration, or
    a SimTrace (whose per-core stats and duration are used).  Updates are
    spread evenly over the core's parallel units; utilization is busy time
    (updates * service time) over elapsed time, saturation is flagged when
    the offered rate exceeds what the units can serve.  The queueing delay
    uses the deterministic-service single-server formula
    wait = rho * s / (2 * (1 - rho)).
    """
    if hasattr(updates_per_core, "core_stats"):
        trace = updates_per_core
        updates_per_core = {port: stats["updates"]
                            for port, stats in trace.core_stats.items()}
        duration_us = trace.duration_us if duration_us is None else duration_us
    if model is None:
        model = TimingModel()
    if duration_us is None or duration_us <= 0:
        raise ValueError("duration must be positive")
    loads = []
    elapsed_ns = duration_us * 1000.0
    for port in sorted(updates_per_core):
        updates = updates_per_core[port]
        per_unit = updates / model.units_per_core
        rho = per_unit * model.neuron_unit_service_ns / elapsed_ns
        offered = per_unit / (duration_us * 1e-6)
        saturated = rho > 1.0
        if saturated:
            wait = math.inf
        else:
            wait = (rho * model.neuron_unit_service_ns / (2.0 * (1.0 - rho))
                    if rho < 1.0 else math.inf)
        loads.append(UnitLoad(port, updates, offered, rho, saturated, wait))
    return ThroughputReport(duration_us, tuple(loads))


def load_timing_profile(text: str) -> TimingModel:
    """Parse a timing profile JSON document."""
    import json

    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("timing profile must be a JSON object")
    known = {"fixed_pipeline_overhead_ns", "per_layer_latency_ns",
             "neuron_unit_service_ns", "units_per_core"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"timing profile: unknown field {sorted(unknown)[0]!r}")
    return TimingModel(**doc)


__all__ = [
    "ThroughputReport", "TimingModel", "UnitLoad", "account_throughput",
    "all_paths", "estimate_latency", "latency_distribution",
    "load_timing_profile", "longest_path",
]
