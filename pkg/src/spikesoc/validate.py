"""Resource and topology validation of a network against a chip profile.

Violations are report entries, never exceptions: a single pass collects
everything that is wrong so a mapping tool can show all of it at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .config import (
    ChipProfile,
    DimensionError,
    LayerConfig,
    MAX_FANOUT,
    MAX_FEATURES,
    MAX_KERNEL,
    NetworkConfig,
    compute_output_dims,
    pooled_output_dims,
)
from .events import PREPROC, READOUT, core_port, is_core_port
from .router import build_route_table, find_cycle


@dataclass(frozen=True)
class Violation:
    where: str          # port name or "network"
    constraint: str     # stable machine-readable name
    required: object
    limit: object
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.where}: {self.constraint}: required {self.required}, limit {self.limit}"
        return f"{msg} ({self.detail})" if self.detail else msg


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, where: str, constraint: str, required: object, limit: object,
            detail: str = "") -> None:
        self.violations.append(Violation(where, constraint, required, limit, detail))

    def __str__(self) -> str:
        if self.ok:
            return "configuration valid: no violations"
        lines = [f"{len(self.violations)} violation(s):"]
        lines += [f"  - {v}" for v in self.violations]
        return "\n".join(lines)


def _source_channel_span(net: NetworkConfig, port: str) -> Optional[int]:
    """Number of distinct channels a source port can emit (before shifting)."""
    if port == PREPROC:
        return net.preproc.output_channels()
    if is_core_port(port):
        layer = net.layer_by_core(int(port[4:]))
        if layer is not None:
            return layer.out_features
    return None


def _source_output_dims(net: NetworkConfig, port: str) -> Optional[tuple[int, int]]:
    if port == PREPROC:
        return net.preproc.output_dims()
    if is_core_port(port):
        layer = net.layer_by_core(int(port[4:]))
        if layer is not None:
            try:
                return pooled_output_dims(layer)
            except DimensionError:
                return None
    return None


def _check_layer_limits(layer: LayerConfig, report: ValidationReport) -> bool:
    """Architectural bounds for one layer.  Returns True when the layer is
    structurally sound, so that capacity arithmetic on it is meaningful."""
    port = core_port(layer.core_id)
    ok = True
    if not layer.fc_mode and (layer.kernel_w > MAX_KERNEL or layer.kernel_h > MAX_KERNEL):
        report.add(port, "max kernel size", max(layer.kernel_w, layer.kernel_h), MAX_KERNEL,
                   f"kernel {layer.kernel_w}x{layer.kernel_h}")
        ok = False
    if layer.out_features > MAX_FEATURES:
        report.add(port, "features per layer", layer.out_features, MAX_FEATURES)
        ok = False
    if layer.in_channels > MAX_FEATURES:
        report.add(port, "input channels", layer.in_channels, MAX_FEATURES)
        ok = False
    return ok


def _check_layer_capacity(layer: LayerConfig, profile: ChipProfile,
                          report: ValidationReport) -> None:
    port = core_port(layer.core_id)
    core = profile.cores[layer.core_id]
    if layer.fc_mode:
        # FC synapses live in the kernel memory; the FC cap is the binding
        # constraint, so the generic kernel-memory check is not repeated.
        synapses = layer.fc_inputs * layer.out_features
        if synapses > core.fc_synapses:
            report.add(port, "fc synapse cap", synapses, core.fc_synapses,
                       f"{layer.fc_inputs} inputs x {layer.out_features} outputs")
    else:
        need = layer.kernel_words()
        if need > core.kernel_words:
            report.add(port, "kernel memory", need, core.kernel_words,
                       f"{layer.in_channels}x{layer.out_features}x"
                       f"{layer.kernel_h}x{layer.kernel_w} words")
    try:
        out_w, out_h = compute_output_dims(layer)
    except DimensionError as exc:
        report.add(port, "dimension underflow", f"{layer.kernel_w}x{layer.kernel_h}",
                   f"{layer.in_width + 2 * layer.pad_x}x{layer.in_height + 2 * layer.pad_y}",
                   str(exc))
        return
    neurons = layer.out_features * out_w * out_h
    if neurons > core.neuron_words:
        report.add(port, "neuron memory", neurons, core.neuron_words,
                   f"{layer.out_features}x{out_w}x{out_h} words")
    if layer.out_features > core.bias_words:
        report.add(port, "bias memory", layer.out_features, core.bias_words)


def _check_destinations(net: NetworkConfig, report: ValidationReport) -> None:
    configured = {core_port(l.core_id) for l in net.layers} | {READOUT}
    sources = [(PREPROC, net.preproc.destinations)]
    sources += [(core_port(l.core_id), l.destinations) for l in net.layers]

    if not net.preproc.destinations:
        report.add(PREPROC, "no destinations", 0, "1..2")

    for port, dests in sources:
        if len(dests) > MAX_FANOUT:
            report.add(port, "fan-out", len(dests), MAX_FANOUT)
        targets = [d.target for d in dests]
        for t in set(targets):
            if targets.count(t) > 1:
                report.add(port, "duplicate destination", t, "distinct targets")
        for d in dests:
            if d.target not in configured:
                report.add(port, "unknown destination", d.target, "configured ports")


def _check_channel_mapping(net: NetworkConfig, report: ValidationReport) -> None:
    """Per destination: shifted channel ranges must fit the declared input
    space and must not overlap between sources."""
    feeders: dict[str, list[tuple[str, int, int]]] = {}
    sources = [(PREPROC, net.preproc.destinations)]
    sources += [(core_port(l.core_id), l.destinations) for l in net.layers]
    for port, dests in sources:
        span = _source_channel_span(net, port)
        if span is None:
            continue
        for d in dests:
            feeders.setdefault(d.target, []).append((port, d.channel_shift, span))

    for target, entries in feeders.items():
        if is_core_port(target):
            dest_layer = net.layer_by_core(int(target[4:]))
            if dest_layer is None:
                continue
            limit = dest_layer.in_channels
        elif target == READOUT:
            limit = net.readout.n_classes
        else:
            continue

        for src, shift, span in entries:
            if shift + span > limit:
                report.add(target, "channel range", shift + span, limit,
                           f"source {src} maps channels {shift}..{shift + span - 1}")
        entries = sorted(entries, key=lambda e: e[1])
        for (src_a, sh_a, sp_a), (src_b, sh_b, sp_b) in zip(entries, entries[1:]):
            if sh_a + sp_a > sh_b:
                report.add(target, "channel collision",
                           f"[{sh_b}..{sh_b + sp_b - 1}]",
                           f"disjoint from [{sh_a}..{sh_a + sp_a - 1}]",
                           f"sources {src_a} and {src_b}")

    # Spatial compatibility: a source's (pooled) output space must match the
    # destination layer's declared input space.
    for target, entries in feeders.items():
        if not is_core_port(target):
            continue
        dest_layer = net.layer_by_core(int(target[4:]))
        if dest_layer is None:
            continue
        for src, _, _ in entries:
            dims = _source_output_dims(net, src)
            if dims is not None and dims != (dest_layer.in_width, dest_layer.in_height):
                report.add(target, "input dims mismatch",
                           f"{dims[0]}x{dims[1]} from {src}",
                           f"{dest_layer.in_width}x{dest_layer.in_height}")


def validate_network(net: NetworkConfig, profile: Optional[ChipProfile] = None) -> ValidationReport:
    """Check a parsed network against the chip limits.

    Capacity arithmetic is skipped for layers that already violate an
    architectural bound (their memory need is not meaningful), so each
    mis-sized quantity yields exactly one named violation.
    """
    profile = profile if profile is not None else net.profile
    report = ValidationReport()

    for layer in net.layers:
        if layer.core_id >= profile.n_cores:
            report.add(core_port(layer.core_id), "core id", layer.core_id,
                       profile.n_cores - 1)
            continue
        if _check_layer_limits(layer, report):
            _check_layer_capacity(layer, profile, report)

    _check_destinations(net, report)
    _check_channel_mapping(net, report)

    table = build_route_table(net)
    cycle = find_cycle(table)
    if cycle is not None:
        report.add("network", "cycle", " -> ".join(cycle), "feed-forward DAG")
    return report


__all__ = ["ValidationReport", "Violation", "validate_network"]
