"""Network description: domain types, JSON parsing, serialization.

A network document is UTF-8 JSON with the top-level keys "preproc",
"layers", "readout", "profile" (optional), "sensor" (optional) and
"strict_strides" (optional).  As a shorthand, a document may instead carry a
single "topology" key such as "34x34x2-16C5-16C3-P2-8C3-F10"; it expands to
a full configuration with one convolution or fully connected layer per core.
The complete schema is documented in docs/config_schema.md.

Hard architectural limits (kernel size, features per layer, memory
capacities, fan-out) are intentionally *not* rejected here: parsing enforces
structural sanity only, and `validate.validate_network` reports limit
violations so that a single document can be checked against different chip
profiles.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .events import (
    DEFAULT_SENSOR_HEIGHT,
    DEFAULT_SENSOR_WIDTH,
    READOUT,
    core_port,
)

MAX_KERNEL = 16
MAX_FEATURES = 1024
MAX_CLASSES = 16
MAX_FANOUT = 2
POOL_FACTORS = (1, 2, 4)
STRICT_STRIDES = (1, 2, 4, 8)
I16_MIN = -32768
I16_MAX = 32767

POLARITY_MODES = ("both_channels", "on_only", "off_only", "merged")
READOUT_MODES = ("moving_average", "bin_count")
RESET_MODES = ("subtract", "reset")


class ConfigError(ValueError):
    """Raised for malformed or out-of-range configuration documents."""


class DimensionError(ConfigError):
    """Kernel larger than the padded input: no output positions exist."""


@dataclass(frozen=True)
class Destination:
    """One routing target of a block: a port name plus the additive channel
    offset applied to events sent there."""

    target: str
    channel_shift: int = 0


@dataclass(frozen=True)
class CoreProfile:
    kernel_words: int      # 8-bit kernel memory words
    neuron_words: int      # 16-bit neuron state words
    bias_words: int        # 16-bit bias words
    fc_synapses: int       # max synapse count in fully connected mode


@dataclass(frozen=True)
class ChipProfile:
    cores: tuple[CoreProfile, ...]
    total_synaptic_bytes: int = 272 * 1024
    total_neuron_words: int = 327_600

    @property
    def n_cores(self) -> int:
        return len(self.cores)

    def check(self) -> None:
        ksum = sum(c.kernel_words for c in self.cores)
        if ksum > self.total_synaptic_bytes:
            raise ConfigError(
                f"profile: per-core kernel capacities sum to {ksum} words, "
                f"exceeding the total synaptic memory of {self.total_synaptic_bytes}"
            )
        nsum = sum(c.neuron_words for c in self.cores)
        if nsum > self.total_neuron_words:
            raise ConfigError(
                f"profile: per-core neuron capacities sum to {nsum} words, "
                f"exceeding the total neuron budget of {self.total_neuron_words}"
            )


def default_profile() -> ChipProfile:
    """Nine cores in three size classes.

    Only the chip totals (272 KB synaptic memory, 327.6K neuron words) and
    the three fully-connected caps (65K/32K/16K synapses) are known per
    core class, not the exact per-core split.  The split below makes the
    kernel capacities match the FC caps and sum to the 272 KB total
    (2*65536 + 2*32768 + 5*16384 = 278528 bytes); the neuron words are
    spread uniformly (9 * 36400 = 327600).  All capacities can be
    overridden in the "profile" section.
    """
    big = CoreProfile(65536, 36400, 1024, 65536)
    mid = CoreProfile(32768, 36400, 1024, 32768)
    small = CoreProfile(16384, 36400, 1024, 16384)
    return ChipProfile(cores=(big, big, mid, mid, small, small, small, small, small))


@dataclass(frozen=True)
class PreprocConfig:
    """Sensor event pre-processing stages, applied in fixed order:
    hot-pixel kill, pooling, ROI cut, mirror/swap, polarity, source mapping.
    """

    sensor_width: int = DEFAULT_SENSOR_WIDTH
    sensor_height: int = DEFAULT_SENSOR_HEIGHT
    kill_mask: frozenset[tuple[int, int]] = frozenset()
    pool_x: int = 1
    pool_y: int = 1
    roi: tuple[int, int, int, int] = (0, 0, DEFAULT_SENSOR_WIDTH, DEFAULT_SENSOR_HEIGHT)
    mirror_x: bool = False
    mirror_y: bool = False
    swap_xy: bool = False
    polarity_mode: str = "both_channels"
    destinations: tuple[Destination, ...] = ()
    monitor_tap: bool = False

    def pooled_dims(self) -> tuple[int, int]:
        w = (self.sensor_width - 1) // self.pool_x + 1
        h = (self.sensor_height - 1) // self.pool_y + 1
        return w, h

    def output_dims(self) -> tuple[int, int]:
        """Dimensions of the event space handed to the network (post ROI,
        post swap)."""
        _, _, w, h = self.roi
        return (h, w) if self.swap_xy else (w, h)

    def output_channels(self) -> int:
        return 2 if self.polarity_mode == "both_channels" else 1


@dataclass(frozen=True)
class ReadoutConfig:
    n_classes: int
    mode: str = "bin_count"          # "moving_average" or "bin_count"
    window: int = 1                  # bins per moving average
    thresholds: Optional[tuple[int, ...]] = None


@dataclass
class LayerConfig:
    """Configuration of one convolution (or fully connected) core."""

    core_id: int
    in_channels: int
    out_features: int
    in_width: int
    in_height: int
    kernel_w: int = 1
    kernel_h: int = 1
    stride_x: int = 1
    stride_y: int = 1
    pad_x: int = 0
    pad_y: int = 0
    threshold: int = 1
    strict_threshold: bool = False   # spike on v > threshold instead of v >= threshold
    reset_mode: str = "subtract"
    reset_value: int = 0
    lower_bound: int = I16_MIN
    leak_enabled: bool = False
    pool_x: int = 1
    pool_y: int = 1
    fc_mode: bool = False
    destinations: tuple[Destination, ...] = ()
    weights: Optional[np.ndarray] = None         # int8, (c, f, kh, kw); FC: (i_max, f, 1, 1)
    weights_spec: Optional[dict] = None          # unresolved "random"/"file" directive
    bias: Optional[np.ndarray] = None            # int16, (f,)
    bias_spec: Optional[dict] = None             # unresolved "file" directive
    neuron_init: Optional[np.ndarray] = None     # int16, compressed address order
    neuron_init_spec: Optional[dict] = None
    kernel_kill: tuple[tuple[int, int, int, int], ...] = ()
    neuron_kill: tuple[tuple[int, int, int], ...] = ()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LayerConfig):
            return NotImplemented
        return _layer_to_dict(self) == _layer_to_dict(other)

    @property
    def fc_inputs(self) -> int:
        """Flattened input count in fully connected mode."""
        return self.in_channels * self.in_width * self.in_height

    def kernel_words(self) -> int:
        if self.fc_mode:
            return self.fc_inputs * self.out_features
        return self.in_channels * self.out_features * self.kernel_w * self.kernel_h


@dataclass
class NetworkConfig:
    preproc: PreprocConfig
    layers: tuple[LayerConfig, ...]
    readout: ReadoutConfig
    profile: ChipProfile = field(default_factory=default_profile)
    sensor_width: int = DEFAULT_SENSOR_WIDTH
    sensor_height: int = DEFAULT_SENSOR_HEIGHT
    strict_strides: bool = True

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkConfig):
            return NotImplemented
        return to_document(self) == to_document(other)

    def layer_by_core(self, core_id: int) -> Optional[LayerConfig]:
        for layer in self.layers:
            if layer.core_id == core_id:
                return layer
        return None


def compute_output_dims(layer: LayerConfig) -> tuple[int, int]:
    """Output width/height of a layer before pooling.

    out = floor((in + 2*pad - kernel) / stride) + 1, per axis.
    """
    if layer.fc_mode:
        return 1, 1
    span_x = layer.in_width + 2 * layer.pad_x - layer.kernel_w
    span_y = layer.in_height + 2 * layer.pad_y - layer.kernel_h
    if span_x < 0 or span_y < 0:
        raise DimensionError(
            f"core {layer.core_id}: kernel {layer.kernel_w}x{layer.kernel_h} larger "
            f"than padded input {layer.in_width + 2 * layer.pad_x}x"
            f"{layer.in_height + 2 * layer.pad_y}"
        )
    return span_x // layer.stride_x + 1, span_y // layer.stride_y + 1


def pooled_output_dims(layer: LayerConfig) -> tuple[int, int]:
    ow, oh = compute_output_dims(layer)
    return (ow - 1) // layer.pool_x + 1, (oh - 1) // layer.pool_y + 1


# ---------------------------------------------------------------------------
# parsing helpers

def _expect_mapping(obj: Any, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    return obj


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown field {sorted(unknown)[0]!r}")


def _get_int(obj: dict, key: str, where: str, *, default: Any = ...,
             lo: Optional[int] = None, hi: Optional[int] = None,
             bound_note: str = "") -> int:
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{where}: missing required field {key!r}")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: field {key!r} must be an integer")
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        note = bound_note or f"{lo}..{hi}"
        raise ConfigError(f"{where}: {key}={value} out of range {note}")
    return value


def _get_bool(obj: dict, key: str, where: str, default: bool = False) -> bool:
    value = obj.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{where}: field {key!r} must be a boolean")
    return value


def _get_pair(obj: dict, key: str, where: str, default: Any,
              choices: Optional[Sequence[int]] = None,
              lo: Optional[int] = None) -> tuple[int, int]:
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{where}: missing required field {key!r}")
        return default
    value = obj[key]
    if (not isinstance(value, list) or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in value)):
        raise ConfigError(f"{where}: field {key!r} must be a pair of integers")
    a, b = value
    for v in (a, b):
        if choices is not None and v not in choices:
            raise ConfigError(f"{where}: {key}={v} not in allowed set {list(choices)}")
        if lo is not None and v < lo:
            raise ConfigError(f"{where}: {key}={v} out of range (must be >= {lo})")
    return a, b


def _parse_destinations(obj: dict, where: str, *, key: str = "destinations") -> tuple[Destination, ...]:
    raw = obj.get(key, [])
    if not isinstance(raw, list):
        raise ConfigError(f"{where}: field {key!r} must be a list")
    dests = []
    for i, entry in enumerate(raw):
        entry = _expect_mapping(entry, f"{where}.destinations[{i}]")
        _check_keys(entry, {"target", "channel_shift"}, f"{where}.destinations[{i}]")
        if "target" not in entry:
            raise ConfigError(f"{where}.destinations[{i}]: missing required field 'target'")
        target = entry["target"]
        if isinstance(target, bool) or isinstance(target, int):
            if isinstance(target, bool) or target < 0:
                raise ConfigError(f"{where}.destinations[{i}]: target must be a core id >= 0 or \"readout\"")
            port = core_port(target)
        elif target == READOUT:
            port = READOUT
        else:
            raise ConfigError(
                f"{where}.destinations[{i}]: target must be a core id or \"readout\", got {target!r}")
        shift = _get_int(entry, "channel_shift", f"{where}.destinations[{i}]",
                         default=0, lo=0, hi=MAX_FEATURES - 1)
        dests.append(Destination(port, shift))
    return tuple(dests)


def _parse_weight_array(raw: Any, shape: tuple[int, ...], where: str) -> np.ndarray:
    try:
        arr = np.asarray(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: malformed weights array: {exc}") from exc
    if arr.shape != shape:
        raise ConfigError(f"{where}: weights shape {arr.shape} does not match expected {shape}")
    if arr.size and (not np.issubdtype(arr.dtype, np.integer)):
        raise ConfigError(f"{where}: weights must be integers")
    if arr.size and (arr.min() < -128 or arr.max() > 127):
        raise ConfigError(f"{where}: weight out of range -128..127")
    return arr.astype(np.int8)


def _parse_layer(obj: dict, where: str, strict_strides: bool, n_cores: int) -> LayerConfig:
    obj = _expect_mapping(obj, where)
    _check_keys(obj, {
        "core", "in_channels", "out_features", "in_size", "kernel", "stride",
        "padding", "threshold", "strict_threshold", "reset_mode", "reset_value",
        "lower_bound", "leak_enabled", "bias", "pool", "fc", "destinations",
        "weights", "neuron_init", "kernel_kill", "neuron_kill",
    }, where)

    core_id = _get_int(obj, "core", where, lo=0, hi=n_cores - 1)
    fc_mode = _get_bool(obj, "fc", where, False)
    in_channels = _get_int(obj, "in_channels", where, lo=1)
    out_features = _get_int(obj, "out_features", where, lo=1)
    in_w, in_h = _get_pair(obj, "in_size", where, default=...)
    # The chip limit of 16x16 is reported by validate_network, not here.
    kw, kh = _get_pair(obj, "kernel", where, default=(1, 1))
    if kw < 1:
        raise ConfigError(f"{where}: kernel_w={kw} out of range 1..{MAX_KERNEL}")
    if kh < 1:
        raise ConfigError(f"{where}: kernel_h={kh} out of range 1..{MAX_KERNEL}")
    stride_choices = STRICT_STRIDES if strict_strides else None
    sx, sy = _get_pair(obj, "stride", where, default=(1, 1), choices=stride_choices, lo=1)
    px, py = _get_pair(obj, "padding", where, default=(0, 0), lo=0)
    threshold = _get_int(obj, "threshold", where, lo=1, hi=I16_MAX)
    lower_bound = _get_int(obj, "lower_bound", where, default=I16_MIN, lo=I16_MIN, hi=0)
    reset_mode = obj.get("reset_mode", "subtract")
    if reset_mode not in RESET_MODES:
        raise ConfigError(f"{where}: reset_mode must be one of {list(RESET_MODES)}")
    reset_value = _get_int(obj, "reset_value", where, default=0, lo=I16_MIN, hi=I16_MAX)
    pool_x, pool_y = _get_pair(obj, "pool", where, default=(1, 1), choices=POOL_FACTORS)
    if fc_mode and (kw, kh) != (1, 1):
        raise ConfigError(f"{where}: fully connected layers take no kernel field")

    layer = LayerConfig(
        core_id=core_id,
        in_channels=in_channels,
        out_features=out_features,
        in_width=in_w,
        in_height=in_h,
        kernel_w=kw,
        kernel_h=kh,
        stride_x=sx,
        stride_y=sy,
        pad_x=px,
        pad_y=py,
        threshold=threshold,
        strict_threshold=_get_bool(obj, "strict_threshold", where, False),
        reset_mode=reset_mode,
        reset_value=reset_value,
        lower_bound=lower_bound,
        leak_enabled=_get_bool(obj, "leak_enabled", where, False),
        pool_x=pool_x,
        pool_y=pool_y,
        fc_mode=fc_mode,
        destinations=_parse_destinations(obj, where),
    )

    if "weights" in obj:
        raw = obj["weights"]
        if isinstance(raw, dict):
            _check_keys(raw, {"random", "file"}, f"{where}.weights")
            if "random" in raw:
                rnd = _expect_mapping(raw["random"], f"{where}.weights.random")
                _check_keys(rnd, {"seed", "low", "high"}, f"{where}.weights.random")
                _get_int(rnd, "low", f"{where}.weights.random", default=-8, lo=-128, hi=127)
                _get_int(rnd, "high", f"{where}.weights.random", default=8, lo=-128, hi=127)
                layer.weights_spec = {"random": dict(rnd)}
            elif "file" in raw:
                if not isinstance(raw["file"], str):
                    raise ConfigError(f"{where}.weights.file must be a path string")
                layer.weights_spec = {"file": raw["file"]}
            else:
                raise ConfigError(f"{where}.weights: expected 'random' or 'file'")
        else:
            shape = ((layer.fc_inputs, out_features) if fc_mode
                     else (in_channels, out_features, kh, kw))
            arr = _parse_weight_array(raw, shape, where)
            if fc_mode:
                arr = arr.reshape(layer.fc_inputs, out_features, 1, 1)
            layer.weights = arr

    if "bias" in obj:
        raw = obj["bias"]
        if isinstance(raw, dict):
            _check_keys(raw, {"file"}, f"{where}.bias")
            if not isinstance(raw.get("file"), str):
                raise ConfigError(f"{where}.bias.file must be a path string")
            layer.bias_spec = {"file": raw["file"]}
        else:
            arr = np.asarray(raw)
            if arr.shape != (out_features,):
                raise ConfigError(f"{where}: bias must have one entry per output feature")
            if arr.size and (arr.min() < I16_MIN or arr.max() > I16_MAX):
                raise ConfigError(f"{where}: bias out of range {I16_MIN}..{I16_MAX}")
            layer.bias = arr.astype(np.int16)

    if "neuron_init" in obj:
        raw = obj["neuron_init"]
        if isinstance(raw, dict):
            _check_keys(raw, {"file"}, f"{where}.neuron_init")
            if not isinstance(raw.get("file"), str):
                raise ConfigError(f"{where}.neuron_init.file must be a path string")
            layer.neuron_init_spec = {"file": raw["file"]}
        else:
            arr = np.asarray(raw)
            try:
                out_w, out_h = compute_output_dims(layer)
            except DimensionError:
                out_w = out_h = None
            if out_w is not None and arr.shape != (out_features * out_w * out_h,):
                raise ConfigError(
                    f"{where}: neuron_init must hold {out_features * out_w * out_h} "
                    f"words in compressed address order")
            if arr.size and (arr.min() < I16_MIN or arr.max() > I16_MAX):
                raise ConfigError(f"{where}: neuron_init out of range {I16_MIN}..{I16_MAX}")
            layer.neuron_init = arr.astype(np.int16)

    for key, width in (("kernel_kill", 4), ("neuron_kill", 3)):
        raw = obj.get(key, [])
        if not isinstance(raw, list):
            raise ConfigError(f"{where}: field {key!r} must be a list")
        entries = []
        for entry in raw:
            if (not isinstance(entry, list) or len(entry) != width
                    or any(isinstance(v, bool) or not isinstance(v, int) or v < 0 for v in entry)):
                raise ConfigError(f"{where}: {key} entries must be lists of {width} non-negative integers")
            entries.append(tuple(entry))
        setattr(layer, key, tuple(entries))

    return layer


def _parse_preproc(obj: dict, sensor: tuple[int, int]) -> PreprocConfig:
    where = "preproc"
    obj = _expect_mapping(obj, where)
    _check_keys(obj, {
        "pool", "roi", "mirror_x", "mirror_y", "swap_xy", "polarity",
        "kill_pixels", "destinations", "monitor_tap",
    }, where)
    sensor_w, sensor_h = sensor
    pool_x, pool_y = _get_pair(obj, "pool", where, default=(1, 1), choices=POOL_FACTORS)
    pooled_w = (sensor_w - 1) // pool_x + 1
    pooled_h = (sensor_h - 1) // pool_y + 1

    roi_raw = obj.get("roi")
    if roi_raw is None:
        roi = (0, 0, pooled_w, pooled_h)
    else:
        if (not isinstance(roi_raw, list) or len(roi_raw) != 4
                or any(isinstance(v, bool) or not isinstance(v, int) for v in roi_raw)):
            raise ConfigError(f"{where}: roi must be [x0, y0, width, height]")
        x0, y0, w, h = roi_raw
        if w < 1 or h < 1 or w > DEFAULT_SENSOR_WIDTH or h > DEFAULT_SENSOR_HEIGHT:
            raise ConfigError(f"{where}: roi size {w}x{h} out of range 1..128")
        if x0 < 0 or y0 < 0 or x0 + w > pooled_w or y0 + h > pooled_h:
            raise ConfigError(
                f"{where}: roi ({x0},{y0},{w},{h}) exceeds the pooled sensor space "
                f"{pooled_w}x{pooled_h}")
        roi = (x0, y0, w, h)

    polarity = obj.get("polarity", "both_channels")
    if polarity not in POLARITY_MODES:
        raise ConfigError(f"{where}: polarity must be one of {list(POLARITY_MODES)}")

    kill_raw = obj.get("kill_pixels", [])
    if not isinstance(kill_raw, list):
        raise ConfigError(f"{where}: kill_pixels must be a list of [x, y] pairs")
    kill = set()
    for entry in kill_raw:
        if (not isinstance(entry, list) or len(entry) != 2
                or any(isinstance(v, bool) or not isinstance(v, int) for v in entry)):
            raise ConfigError(f"{where}: kill_pixels must be a list of [x, y] pairs")
        x, y = entry
        if not (0 <= x < sensor_w and 0 <= y < sensor_h):
            raise ConfigError(f"{where}: kill pixel ({x},{y}) outside the {sensor_w}x{sensor_h} sensor")
        kill.add((x, y))

    return PreprocConfig(
        sensor_width=sensor_w,
        sensor_height=sensor_h,
        kill_mask=frozenset(kill),
        pool_x=pool_x,
        pool_y=pool_y,
        roi=roi,
        mirror_x=_get_bool(obj, "mirror_x", where),
        mirror_y=_get_bool(obj, "mirror_y", where),
        swap_xy=_get_bool(obj, "swap_xy", where),
        polarity_mode=polarity,
        destinations=_parse_destinations(obj, where),
        monitor_tap=_get_bool(obj, "monitor_tap", where),
    )


def _parse_readout(obj: dict) -> ReadoutConfig:
    where = "readout"
    obj = _expect_mapping(obj, where)
    _check_keys(obj, {"classes", "mode", "window", "thresholds"}, where)
    n_classes = _get_int(obj, "classes", where, lo=1, hi=MAX_CLASSES)
    mode = obj.get("mode", "bin_count")
    if mode not in READOUT_MODES:
        raise ConfigError(f"{where}: mode must be one of {list(READOUT_MODES)}")
    window = _get_int(obj, "window", where, default=1, lo=1)
    thresholds = None
    if obj.get("thresholds") is not None:
        raw = obj["thresholds"]
        if (not isinstance(raw, list) or len(raw) != n_classes
                or any(isinstance(v, bool) or not isinstance(v, int) or v < 0 for v in raw)):
            raise ConfigError(f"{where}: thresholds must be {n_classes} non-negative integers")
        thresholds = tuple(raw)
    return ReadoutConfig(n_classes=n_classes, mode=mode, window=window, thresholds=thresholds)


def _parse_profile(obj: dict) -> ChipProfile:
    where = "profile"
    obj = _expect_mapping(obj, where)
    _check_keys(obj, {"cores", "total_synaptic_bytes", "total_neuron_words"}, where)
    base = default_profile()
    total_syn = _get_int(obj, "total_synaptic_bytes", where, default=base.total_synaptic_bytes, lo=1)
    total_neu = _get_int(obj, "total_neuron_words", where, default=base.total_neuron_words, lo=1)
    cores: tuple[CoreProfile, ...] = base.cores
    if "cores" in obj:
        raw = obj["cores"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{where}: cores must be a non-empty list")
        parsed = []
        for i, entry in enumerate(raw):
            entry = _expect_mapping(entry, f"{where}.cores[{i}]")
            _check_keys(entry, {"kernel_words", "neuron_words", "bias_words", "fc_synapses"},
                        f"{where}.cores[{i}]")
            parsed.append(CoreProfile(
                kernel_words=_get_int(entry, "kernel_words", f"{where}.cores[{i}]", lo=1),
                neuron_words=_get_int(entry, "neuron_words", f"{where}.cores[{i}]", lo=1),
                bias_words=_get_int(entry, "bias_words", f"{where}.cores[{i}]", lo=1),
                fc_synapses=_get_int(entry, "fc_synapses", f"{where}.cores[{i}]", lo=1),
            ))
        cores = tuple(parsed)
    profile = ChipProfile(cores=cores, total_synaptic_bytes=total_syn,
                          total_neuron_words=total_neu)
    profile.check()
    return profile


def parse_network_description(text: str, base_dir: Optional[Path | str] = None) -> NetworkConfig:
    """Parse a JSON network document into a NetworkConfig with defaults applied.

    Weight directives ({"random": ...} / {"file": ...}) are kept symbolic and
    materialized when core state is built; `base_dir` anchors relative file
    references.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    doc = _expect_mapping(doc, "document")

    if "topology" in doc:
        _check_keys(doc, {"topology", "threshold", "weight_seed", "weight_range", "sensor"}, "document")
        sensor = _get_pair(doc, "sensor", "document",
                           default=(DEFAULT_SENSOR_WIDTH, DEFAULT_SENSOR_HEIGHT), lo=1)
        if not isinstance(doc["topology"], str):
            raise ConfigError("document: topology must be a string")
        return network_from_topology(
            doc["topology"],
            threshold=_get_int(doc, "threshold", "document", default=100, lo=1, hi=I16_MAX),
            weight_seed=_get_int(doc, "weight_seed", "document", default=0, lo=0),
            weight_range=_get_int(doc, "weight_range", "document", default=8, lo=1, hi=127),
            sensor=sensor,
        )

    _check_keys(doc, {"preproc", "layers", "readout", "profile", "sensor", "strict_strides"},
                "document")
    for key in ("preproc", "readout"):
        if key not in doc:
            raise ConfigError(f"document: missing required section {key!r}")
    sensor = _get_pair(doc, "sensor", "document",
                       default=(DEFAULT_SENSOR_WIDTH, DEFAULT_SENSOR_HEIGHT), lo=1)
    strict_strides = _get_bool(doc, "strict_strides", "document", True)
    profile = _parse_profile(doc["profile"]) if "profile" in doc else default_profile()

    layers_raw = doc.get("layers", [])
    if not isinstance(layers_raw, list):
        raise ConfigError("document: layers must be a list")
    layers = []
    seen_cores = set()
    for i, raw in enumerate(layers_raw):
        layer = _parse_layer(raw, f"layers[{i}]", strict_strides, profile.n_cores)
        if layer.core_id in seen_cores:
            raise ConfigError(f"layers[{i}]: core {layer.core_id} configured twice")
        seen_cores.add(layer.core_id)
        if base_dir is not None:
            for attr in ("weights_spec", "bias_spec", "neuron_init_spec"):
                spec = getattr(layer, attr)
                if spec and "file" in spec and not Path(spec["file"]).is_absolute():
                    setattr(layer, attr, {"file": str(Path(base_dir) / spec["file"])})
        layers.append(layer)

    return NetworkConfig(
        preproc=_parse_preproc(doc["preproc"], sensor),
        layers=tuple(layers),
        readout=_parse_readout(doc["readout"]),
        profile=profile,
        sensor_width=sensor[0],
        sensor_height=sensor[1],
        strict_strides=strict_strides,
    )


def load_network(path: Path | str) -> NetworkConfig:
    path = Path(path)
    return parse_network_description(path.read_text(encoding="utf-8"), base_dir=path.parent)


# ---------------------------------------------------------------------------
# serialization

def _dest_to_dict(dest: Destination) -> dict:
    target: Any = dest.target
    if target.startswith("core"):
        target = int(target[4:])
    return {"target": target, "channel_shift": dest.channel_shift}


def _layer_to_dict(layer: LayerConfig) -> dict:
    out: dict[str, Any] = {
        "core": layer.core_id,
        "in_channels": layer.in_channels,
        "out_features": layer.out_features,
        "in_size": [layer.in_width, layer.in_height],
        "kernel": [layer.kernel_w, layer.kernel_h],
        "stride": [layer.stride_x, layer.stride_y],
        "padding": [layer.pad_x, layer.pad_y],
        "threshold": layer.threshold,
        "strict_threshold": layer.strict_threshold,
        "reset_mode": layer.reset_mode,
        "reset_value": layer.reset_value,
        "lower_bound": layer.lower_bound,
        "leak_enabled": layer.leak_enabled,
        "pool": [layer.pool_x, layer.pool_y],
        "fc": layer.fc_mode,
        "destinations": [_dest_to_dict(d) for d in layer.destinations],
    }
    if layer.weights_spec is not None:
        out["weights"] = layer.weights_spec
    elif layer.weights is not None:
        arr = layer.weights
        if layer.fc_mode:
            arr = arr.reshape(layer.fc_inputs, layer.out_features)
        out["weights"] = arr.tolist()
    if layer.bias_spec is not None:
        out["bias"] = layer.bias_spec
    elif layer.bias is not None:
        out["bias"] = layer.bias.tolist()
    if layer.neuron_init_spec is not None:
        out["neuron_init"] = layer.neuron_init_spec
    elif layer.neuron_init is not None:
        out["neuron_init"] = layer.neuron_init.tolist()
    if layer.kernel_kill:
        out["kernel_kill"] = [list(k) for k in layer.kernel_kill]
    if layer.neuron_kill:
        out["neuron_kill"] = [list(k) for k in layer.neuron_kill]
    return out


def to_document(net: NetworkConfig) -> dict:
    pre = net.preproc
    doc: dict[str, Any] = {
        "sensor": [net.sensor_width, net.sensor_height],
        "strict_strides": net.strict_strides,
        "preproc": {
            "pool": [pre.pool_x, pre.pool_y],
            "roi": list(pre.roi),
            "mirror_x": pre.mirror_x,
            "mirror_y": pre.mirror_y,
            "swap_xy": pre.swap_xy,
            "polarity": pre.polarity_mode,
            "kill_pixels": sorted([list(p) for p in pre.kill_mask]),
            "destinations": [_dest_to_dict(d) for d in pre.destinations],
            "monitor_tap": pre.monitor_tap,
        },
        "layers": [_layer_to_dict(l) for l in net.layers],
        "readout": {
            "classes": net.readout.n_classes,
            "mode": net.readout.mode,
            "window": net.readout.window,
            "thresholds": list(net.readout.thresholds) if net.readout.thresholds else None,
        },
        "profile": {
            "cores": [
                {"kernel_words": c.kernel_words, "neuron_words": c.neuron_words,
                 "bias_words": c.bias_words, "fc_synapses": c.fc_synapses}
                for c in net.profile.cores
            ],
            "total_synaptic_bytes": net.profile.total_synaptic_bytes,
            "total_neuron_words": net.profile.total_neuron_words,
        },
    }
    return doc


def serialize_network(net: NetworkConfig) -> str:
    return json.dumps(to_document(net), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# topology shorthand

_TOPOLOGY_HEAD = re.compile(r"^(\d+)x(\d+)x(\d+)$")
_TOPOLOGY_CONV = re.compile(r"^(\d+)C(\d+)$")
_TOPOLOGY_POOL = re.compile(r"^P(\d+)$")
_TOPOLOGY_FC = re.compile(r"^F(\d+)$")


def network_from_topology(topology: str, *, threshold: int = 100,
                          weight_seed: int = 0, weight_range: int = 8,
                          sensor: tuple[int, int] = (DEFAULT_SENSOR_WIDTH, DEFAULT_SENSOR_HEIGHT),
                          ) -> NetworkConfig:
    """Expand a topology string like "34x34x2-16C5-16C3-P2-8C3-F10".

    The head is the input space (width x height x channels).  "NCk" adds a
    convolution layer with N output features and a k x k kernel (stride 1,
    no padding), "Pp" attaches p x p sum pooling to the preceding
    convolution layer, and "FN" adds a fully connected layer with N outputs.
    Layers are placed on consecutive cores starting at core 0; the last
    layer feeds the readout.
    """
    tokens = topology.split("-")
    head = _TOPOLOGY_HEAD.match(tokens[0])
    if head is None:
        raise ConfigError(f"topology: malformed input term {tokens[0]!r} (expected WxHxC)")
    in_w, in_h, channels = (int(g) for g in head.groups())
    if channels not in (1, 2):
        raise ConfigError("topology: input channel count must be 1 or 2")
    sensor_w, sensor_h = sensor
    if in_w > sensor_w or in_h > sensor_h:
        raise ConfigError(f"topology: input {in_w}x{in_h} exceeds the {sensor_w}x{sensor_h} sensor")

    layers: list[LayerConfig] = []
    cur_w, cur_h, cur_c = in_w, in_h, channels
    for tok in tokens[1:]:
        if (m := _TOPOLOGY_CONV.match(tok)) is not None:
            features, k = int(m.group(1)), int(m.group(2))
            layer = LayerConfig(
                core_id=len(layers),
                in_channels=cur_c,
                out_features=features,
                in_width=cur_w,
                in_height=cur_h,
                kernel_w=k,
                kernel_h=k,
                threshold=threshold,
                weights_spec={"random": {"seed": weight_seed + len(layers),
                                         "low": -weight_range, "high": weight_range}},
            )
            cur_w, cur_h = compute_output_dims(layer)
            cur_c = features
            layers.append(layer)
        elif (m := _TOPOLOGY_POOL.match(tok)) is not None:
            p = int(m.group(1))
            if p not in POOL_FACTORS:
                raise ConfigError(f"topology: pooling factor {p} not in {list(POOL_FACTORS)}")
            if not layers or layers[-1].fc_mode:
                raise ConfigError("topology: pooling must follow a convolution layer")
            layers[-1].pool_x = layers[-1].pool_y = p
            cur_w, cur_h = pooled_output_dims(layers[-1])
        elif (m := _TOPOLOGY_FC.match(tok)) is not None:
            outputs = int(m.group(1))
            layer = LayerConfig(
                core_id=len(layers),
                in_channels=cur_c,
                out_features=outputs,
                in_width=cur_w,
                in_height=cur_h,
                fc_mode=True,
                threshold=threshold,
                weights_spec={"random": {"seed": weight_seed + len(layers),
                                         "low": -weight_range, "high": weight_range}},
            )
            cur_w, cur_h, cur_c = 1, 1, outputs
            layers.append(layer)
        else:
            raise ConfigError(f"topology: unrecognized term {tok!r}")

    if not layers:
        raise ConfigError("topology: at least one layer is required")
    for prev, nxt in zip(layers, layers[1:]):
        prev.destinations = (Destination(core_port(nxt.core_id), 0),)
    layers[-1].destinations = (Destination(READOUT, 0),)
    if layers[-1].out_features > MAX_CLASSES:
        raise ConfigError(
            f"topology: final layer has {layers[-1].out_features} outputs, readout supports "
            f"at most {MAX_CLASSES} classes")

    preproc = PreprocConfig(
        sensor_width=sensor_w,
        sensor_height=sensor_h,
        roi=(0, 0, in_w, in_h),
        polarity_mode="both_channels" if channels == 2 else "merged",
        destinations=(Destination(core_port(layers[0].core_id), 0),),
    )
    readout = ReadoutConfig(n_classes=layers[-1].out_features)
    return NetworkConfig(
        preproc=preproc,
        layers=tuple(layers),
        readout=readout,
        sensor_width=sensor_w,
        sensor_height=sensor_h,
    )


__all__ = [
    "ChipProfile", "ConfigError", "CoreProfile", "Destination", "DimensionError",
    "LayerConfig", "NetworkConfig", "PreprocConfig", "ReadoutConfig",
    "compute_output_dims", "default_profile", "load_network",
    "network_from_topology", "parse_network_description", "pooled_output_dims",
    "serialize_network", "to_document",
    "MAX_CLASSES", "MAX_FANOUT", "MAX_FEATURES", "MAX_KERNEL",
    "I16_MAX", "I16_MIN", "POOL_FACTORS", "STRICT_STRIDES",
]
