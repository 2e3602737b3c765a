"""Spiking convolution core.

For every incoming event the kernel is swept over the event's padded
coordinate: the kernel offset and the output coordinate move inversely to
each other under the congruence

    x + pad_x == xo * stride_x + xk     (same for y),

enumerated feature-major, then yk, then xk.  Each reachable (weight,
neuron) pair triggers one saturating 16-bit integrate-and-fire update;
zero weights and killed memory words are skipped.  Spikes are decompressed,
sum-pooled by coordinate floor division and routed with per-destination
channel shifts.

The pure functions below define the contract; `CoreState` delegates the
fused sweep/update loop to the selected kernel backend (see `kernels`).
`process_event_composed` chains the pure functions and is used to check the
fused path against the contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import ModuleType
from typing import NamedTuple, Optional

import numpy as np

from .config import ConfigError, I16_MAX, I16_MIN, LayerConfig, compute_output_dims
from .events import FeatureEvent, MalformedEventError
from .kernels import get_backend


class SynapticTarget(NamedTuple):
    f: int
    xo: int
    yo: int
    xk: int
    yk: int


def sweep_targets(e: FeatureEvent, layer: LayerConfig) -> list[SynapticTarget]:
    """All (feature, output coordinate, kernel offset) tuples reached by one
    event, in deterministic (f, yk, xk) order.

    Direct transcription of the sweep congruence; the kernel backends use a
    closed-form enumeration that must stay equivalent to this.
    """
    if not 0 <= e.c < layer.in_channels:
        raise MalformedEventError(
            f"channel {e.c} outside 0..{layer.in_channels - 1}")
    if not (0 <= e.x < layer.in_width and 0 <= e.y < layer.in_height):
        raise MalformedEventError(
            f"coordinate ({e.x},{e.y}) outside {layer.in_width}x{layer.in_height}")
    out_w, out_h = compute_output_dims(layer)
    xp = e.x + layer.pad_x
    yp = e.y + layer.pad_y
    targets: list[SynapticTarget] = []
    for f in range(layer.out_features):
        for yk in range(layer.kernel_h):
            rem_y = yp - yk
            if rem_y < 0 or rem_y % layer.stride_y:
                continue
            yo = rem_y // layer.stride_y
            if yo >= out_h:
                continue
            for xk in range(layer.kernel_w):
                rem_x = xp - xk
                if rem_x < 0 or rem_x % layer.stride_x:
                    continue
                xo = rem_x // layer.stride_x
                if xo >= out_w:
                    continue
                targets.append(SynapticTarget(f, xo, yo, xk, yk))
    return targets


def fanout_bound(layer: LayerConfig) -> int:
    """Upper bound on len(sweep_targets(...)) for any event."""
    nx = -(-layer.kernel_w // layer.stride_x)
    ny = -(-layer.kernel_h // layer.stride_y)
    return layer.out_features * nx * ny


def compress_neuron_address(f: int, xo: int, yo: int, dims: tuple[int, int, int]) -> int:
    """(f, xo, yo) -> gap-free linear address; dims = (f_max, out_w, out_h)."""
    f_max, out_w, out_h = dims
    if not (0 <= f < f_max and 0 <= xo < out_w and 0 <= yo < out_h):
        raise ValueError(f"neuron address ({f},{xo},{yo}) outside dims {dims}")
    return (f * out_h + yo) * out_w + xo


def decompress_neuron_address(n_comp: int, dims: tuple[int, int, int]) -> tuple[int, int, int]:
    f_max, out_w, out_h = dims
    if not 0 <= n_comp < f_max * out_w * out_h:
        raise ValueError(f"compressed address {n_comp} outside dims {dims}")
    xo = n_comp % out_w
    rest = n_comp // out_w
    return rest // out_h, xo, rest % out_h


def compress_kernel_address(c: int, f: int, xk: int, yk: int,
                            dims: tuple[int, int, int, int]) -> int:
    """(c, f, xk, yk) -> linear kernel word address;
    dims = (c_max, f_max, kernel_w, kernel_h)."""
    c_max, f_max, kw, kh = dims
    if not (0 <= c < c_max and 0 <= f < f_max and 0 <= xk < kw and 0 <= yk < kh):
        raise ValueError(f"kernel address ({c},{f},{xk},{yk}) outside dims {dims}")
    return ((c * f_max + f) * kh + yk) * kw + xk


def lookup_weight(weights: np.ndarray, kill: np.ndarray,
                  c: int, f: int, xk: int, yk: int) -> Optional[int]:
    """Read one kernel word; zero weights and killed words read as nothing."""
    c_max, f_max, kh, kw = weights.shape
    if not (0 <= c < c_max and 0 <= f < f_max and 0 <= xk < kw and 0 <= yk < kh):
        raise ValueError(f"kernel index ({c},{f},{xk},{yk}) outside {weights.shape}")
    w = int(weights[c, f, yk, xk])
    if w == 0 or kill[c, f, yk, xk]:
        return None
    return w


def neuron_update(v: np.ndarray, kill: np.ndarray, n_comp: int, w: int,
                  layer: LayerConfig) -> bool:
    """One read-add-check-write on a membrane word; returns True on spike.

    The add saturates to the signed 16-bit range before the threshold
    check; at most one spike is emitted per update, the residual persists
    in subtract mode; the lower-bound clamp is applied last on both paths.
    Updates on killed words are dropped silently.
    """
    if kill[n_comp]:
        return False
    acc = int(v[n_comp]) + int(w)
    acc = max(I16_MIN, min(I16_MAX, acc))
    if layer.strict_threshold:
        spiked = acc > layer.threshold
    else:
        spiked = acc >= layer.threshold
    if spiked:
        acc = acc - layer.threshold if layer.reset_mode == "subtract" else layer.reset_value
    if acc < layer.lower_bound:
        acc = layer.lower_bound
    v[n_comp] = acc
    return spiked


def pool_and_route(n_comp: int, layer: LayerConfig, out_w: int, out_h: int) -> list[FeatureEvent]:
    """Decompress a spike address, sum-pool the coordinate, emit one headed
    event per destination with the channel shift applied."""
    f, xo, yo = decompress_neuron_address(n_comp, (layer.out_features, out_w, out_h))
    xs = xo // layer.pool_x
    ys = yo // layer.pool_y
    return [FeatureEvent(f + d.channel_shift, xs, ys, d.target)
            for d in layer.destinations]


@dataclass
class CoreState:
    """Memories and counters of one configured core."""

    layer: LayerConfig
    out_w: int
    out_h: int
    weights: np.ndarray                 # int8 (c, f, kh, kw); FC: (i_max, f, 1, 1)
    kernel_kill: np.ndarray             # uint8, same shape
    v: np.ndarray                       # int16 (f * out_h * out_w,)
    neuron_kill: np.ndarray             # uint8, same length
    bias: np.ndarray                    # int16 (f,)
    bias_kill: np.ndarray               # uint8 (f,)
    backend: ModuleType
    events_in: int = 0
    updates: int = 0
    spikes: int = 0
    _spike_buf: np.ndarray = field(init=False, repr=False)
    _leak_buf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        cap = max(fanout_bound(self.layer), self.layer.out_features, 1)
        self._spike_buf = np.empty(cap, dtype=np.int32)
        self._leak_buf = np.empty(max(self.v.shape[0], 1), dtype=np.int32)

    @property
    def neuron_dims(self) -> tuple[int, int, int]:
        return self.layer.out_features, self.out_w, self.out_h

    # -- construction -------------------------------------------------------

    @classmethod
    def from_layer(cls, layer: LayerConfig, *, default_seed: int = 0,
                   backend: Optional[ModuleType] = None) -> "CoreState":
        out_w, out_h = compute_output_dims(layer)
        if layer.fc_mode:
            shape = (layer.fc_inputs, layer.out_features, 1, 1)
        else:
            shape = (layer.in_channels, layer.out_features, layer.kernel_h, layer.kernel_w)
        weights = _materialize_weights(layer, shape, default_seed)
        kernel_kill = np.zeros(shape, dtype=np.uint8)
        for c, f, yk, xk in layer.kernel_kill:
            if c >= shape[0] or f >= shape[1] or yk >= shape[2] or xk >= shape[3]:
                raise ConfigError(
                    f"core {layer.core_id}: kernel kill bit ({c},{f},{yk},{xk}) "
                    f"outside {shape}")
            kernel_kill[c, f, yk, xk] = 1

        n_words = layer.out_features * out_w * out_h
        v = _materialize_neuron_init(layer, n_words)
        neuron_kill = np.zeros(n_words, dtype=np.uint8)
        for f, xo, yo in layer.neuron_kill:
            neuron_kill[compress_neuron_address(f, xo, yo, (layer.out_features, out_w, out_h))] = 1

        bias = _materialize_bias(layer)
        return cls(
            layer=layer,
            out_w=out_w,
            out_h=out_h,
            weights=np.ascontiguousarray(weights, dtype=np.int8),
            kernel_kill=np.ascontiguousarray(kernel_kill),
            v=v,
            neuron_kill=neuron_kill,
            bias=bias,
            bias_kill=np.zeros(layer.out_features, dtype=np.uint8),
            backend=backend if backend is not None else get_backend(),
        )

    # -- event processing ---------------------------------------------------

    def process_event(self, e: FeatureEvent) -> list[FeatureEvent]:
        if self.layer.fc_mode:
            return self.process_fc_event(e)
        layer = self.layer
        if not 0 <= e.c < layer.in_channels:
            raise MalformedEventError(f"channel {e.c} outside 0..{layer.in_channels - 1}")
        if not (0 <= e.x < layer.in_width and 0 <= e.y < layer.in_height):
            raise MalformedEventError(
                f"coordinate ({e.x},{e.y}) outside {layer.in_width}x{layer.in_height}")
        self.events_in += 1
        n_sp, n_up = self.backend.conv_event(
            self.weights, self.kernel_kill, self.v, self.neuron_kill,
            e.c, e.x + layer.pad_x, e.y + layer.pad_y,
            layer.stride_x, layer.stride_y, self.out_w, self.out_h,
            layer.threshold, layer.strict_threshold,
            0 if layer.reset_mode == "subtract" else 1, layer.reset_value,
            layer.lower_bound, self._spike_buf)
        self.updates += n_up
        self.spikes += n_sp
        return self._emit(self._spike_buf[:n_sp])

    def process_fc_event(self, e: FeatureEvent) -> list[FeatureEvent]:
        layer = self.layer
        if not 0 <= e.c < layer.in_channels:
            raise MalformedEventError(f"channel {e.c} outside 0..{layer.in_channels - 1}")
        if not (0 <= e.x < layer.in_width and 0 <= e.y < layer.in_height):
            raise MalformedEventError(
                f"coordinate ({e.x},{e.y}) outside {layer.in_width}x{layer.in_height}")
        i = compress_neuron_address(e.c, e.x, e.y,
                                    (layer.in_channels, layer.in_width, layer.in_height))
        self.events_in += 1
        n_sp, n_up = self.backend.fc_event(
            self.weights.reshape(layer.fc_inputs, layer.out_features),
            self.kernel_kill.reshape(layer.fc_inputs, layer.out_features),
            self.v, self.neuron_kill, i,
            layer.threshold, layer.strict_threshold,
            0 if layer.reset_mode == "subtract" else 1, layer.reset_value,
            layer.lower_bound, self._spike_buf)
        self.updates += n_up
        self.spikes += n_sp
        return self._emit(self._spike_buf[:n_sp])

    def leak_tick(self) -> list[FeatureEvent]:
        """Apply the per-feature bias to every live neuron word, ascending
        address order; zero bias words are skipped like zero weights."""
        layer = self.layer
        n_sp, n_up = self.backend.leak_sweep(
            self.bias, self.bias_kill, self.v, self.neuron_kill,
            self.out_w * self.out_h,
            layer.threshold, layer.strict_threshold,
            0 if layer.reset_mode == "subtract" else 1, layer.reset_value,
            layer.lower_bound, self._leak_buf)
        self.updates += n_up
        self.spikes += n_sp
        return self._emit(self._leak_buf[:n_sp])

    def _emit(self, spike_addrs: np.ndarray) -> list[FeatureEvent]:
        if spike_addrs.size == 0:
            return []
        layer = self.layer
        out: list[FeatureEvent] = []
        plane = self.out_w * self.out_h
        for n in spike_addrs:
            n = int(n)
            f, rem = divmod(n, plane)
            yo, xo = divmod(rem, self.out_w)
            xs = xo // layer.pool_x
            ys = yo // layer.pool_y
            for d in layer.destinations:
                out.append(FeatureEvent(f + d.channel_shift, xs, ys, d.target))
        return out


def process_event_composed(core: CoreState, e: FeatureEvent) -> list[FeatureEvent]:
    """Reference composition sweep -> lookup -> update -> pool/route, built
    from the pure contract functions.  Equivalent to CoreState.process_event."""
    layer = core.layer
    core.events_in += 1
    spikes: list[int] = []
    if layer.fc_mode:
        if not 0 <= e.c < layer.in_channels:
            raise MalformedEventError(f"channel {e.c} outside 0..{layer.in_channels - 1}")
        i = compress_neuron_address(e.c, e.x, e.y,
                                    (layer.in_channels, layer.in_width, layer.in_height))
        w2 = core.weights.reshape(layer.fc_inputs, layer.out_features)
        k2 = core.kernel_kill.reshape(layer.fc_inputs, layer.out_features)
        for j in range(layer.out_features):
            w = int(w2[i, j])
            if w == 0 or k2[i, j] or core.neuron_kill[j]:
                continue
            core.updates += 1
            if neuron_update(core.v, core.neuron_kill, j, w, layer):
                spikes.append(j)
    else:
        for t in sweep_targets(e, layer):
            w = lookup_weight(core.weights, core.kernel_kill, e.c, t.f, t.xk, t.yk)
            if w is None:
                continue
            n_comp = compress_neuron_address(t.f, t.xo, t.yo, core.neuron_dims)
            if core.neuron_kill[n_comp]:
                continue
            core.updates += 1
            if neuron_update(core.v, core.neuron_kill, n_comp, w, layer):
                spikes.append(n_comp)
    core.spikes += len(spikes)
    out: list[FeatureEvent] = []
    for n_comp in spikes:
        out.extend(pool_and_route(n_comp, layer, core.out_w, core.out_h))
    return out


def _materialize_weights(layer: LayerConfig, shape: tuple[int, ...], default_seed: int) -> np.ndarray:
    if layer.weights is not None:
        if layer.weights.shape != shape:
            raise ConfigError(
                f"core {layer.core_id}: weights shape {layer.weights.shape} "
                f"does not match {shape}")
        return layer.weights
    spec = layer.weights_spec
    if spec is None:
        return np.zeros(shape, dtype=np.int8)
    if "random" in spec:
        params = spec["random"]
        seed = params.get("seed", default_seed)
        low = params.get("low", -8)
        high = params.get("high", 8)
        rng = np.random.default_rng(seed)
        return rng.integers(low, high, size=shape, endpoint=True).astype(np.int8)
    if "file" in spec:
        return _read_blob(layer, spec["file"], "kernel", shape)
    raise ConfigError(f"core {layer.core_id}: unrecognized weights directive {spec}")


def _read_blob(layer: LayerConfig, path: str, kind: str, shape: tuple[int, ...]) -> np.ndarray:
    from .events_io import read_weight_blob

    got_kind, arr = read_weight_blob(path)
    if got_kind != kind:
        raise ConfigError(f"core {layer.core_id}: blob {path} holds {got_kind} data, "
                          f"expected {kind}")
    if arr.shape != shape:
        raise ConfigError(f"core {layer.core_id}: blob {path} shape {arr.shape} "
                          f"does not match {shape}")
    return arr


def _materialize_bias(layer: LayerConfig) -> np.ndarray:
    if layer.bias is not None:
        return layer.bias.copy()
    if layer.bias_spec is not None:
        return _read_blob(layer, layer.bias_spec["file"], "bias",
                          (layer.out_features,)).astype(np.int16)
    return np.zeros(layer.out_features, dtype=np.int16)


def _materialize_neuron_init(layer: LayerConfig, n_words: int) -> np.ndarray:
    if layer.neuron_init is not None:
        init = layer.neuron_init
    elif layer.neuron_init_spec is not None:
        init = _read_blob(layer, layer.neuron_init_spec["file"], "neuron", (n_words,))
    else:
        return np.zeros(n_words, dtype=np.int16)
    if init.shape != (n_words,):
        raise ConfigError(f"core {layer.core_id}: neuron init holds {init.shape[0]} "
                          f"words, memory has {n_words}")
    if init.size and int(init.min()) < layer.lower_bound:
        raise ConfigError(f"core {layer.core_id}: neuron init below the lower bound "
                          f"{layer.lower_bound}")
    return init.astype(np.int16).copy()


__all__ = [
    "CoreState", "SynapticTarget", "compress_kernel_address",
    "compress_neuron_address", "decompress_neuron_address", "fanout_bound",
    "lookup_weight", "neuron_update", "pool_and_route",
    "process_event_composed", "sweep_targets",
]
