"""Independent reference implementations used to cross-check the cores.

Nothing in this module touches the optimized kernels or CoreState: the
frame oracle works output-centric on a dense count frame, the scatter
oracle loops per event in plain Python, and the scalar simulator keeps its
membranes in a dict with explicit integer arithmetic.  They exist so that
the event-driven implementation and its checks never share code.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .config import LayerConfig, compute_output_dims
from .events import FeatureEvent

I16_MIN = -32768
I16_MAX = 32767


def _axis_range(out_n: int, in_n: int, k_off: int, stride: int, pad: int) -> tuple[int, int]:
    """Output indices o with 0 <= o*stride + k_off - pad < in_n."""
    a = pad - k_off
    o_lo = max(0, -((-a) // stride))
    o_hi = min(out_n - 1, (in_n - 1 + a) // stride)
    return o_lo, o_hi


def oracle_frame_conv(events: Iterable[FeatureEvent], layer: LayerConfig,
                      weights: np.ndarray) -> np.ndarray:
    """Dense strided, padded convolution of the per-channel event-count
    frame; returns the int64 grid (features, out_h, out_w).

    In the linear regime (unreachable threshold, no clamping) the
    event-driven membrane state must equal this exactly.
    """
    out_w, out_h = compute_output_dims(layer)
    frame = np.zeros((layer.in_channels, layer.in_height, layer.in_width), dtype=np.int64)
    for e in events:
        frame[e.c, e.y, e.x] += 1
    grid = np.zeros((layer.out_features, out_h, out_w), dtype=np.int64)
    for c in range(layer.in_channels):
        for f in range(layer.out_features):
            for yk in range(layer.kernel_h):
                yo_lo, yo_hi = _axis_range(out_h, layer.in_height, yk,
                                           layer.stride_y, layer.pad_y)
                if yo_lo > yo_hi:
                    continue
                yi_lo = yo_lo * layer.stride_y + yk - layer.pad_y
                for xk in range(layer.kernel_w):
                    w = int(weights[c, f, yk, xk])
                    if w == 0:
                        continue
                    xo_lo, xo_hi = _axis_range(out_w, layer.in_width, xk,
                                               layer.stride_x, layer.pad_x)
                    if xo_lo > xo_hi:
                        continue
                    xi_lo = xo_lo * layer.stride_x + xk - layer.pad_x
                    ny = yo_hi - yo_lo + 1
                    nx = xo_hi - xo_lo + 1
                    grid[f, yo_lo:yo_hi + 1, xo_lo:xo_hi + 1] += w * frame[
                        c,
                        yi_lo:yi_lo + (ny - 1) * layer.stride_y + 1:layer.stride_y,
                        xi_lo:xi_lo + (nx - 1) * layer.stride_x + 1:layer.stride_x,
                    ]
    return grid


def naive_scatter_conv(events: Iterable[FeatureEvent], layer: LayerConfig,
                       weights: np.ndarray) -> np.ndarray:
    """Third route: per-event scatter with plain Python loops.  Slow; used
    to cross-check the frame formulation on small instances."""
    out_w, out_h = compute_output_dims(layer)
    grid = [[[0] * out_w for _ in range(out_h)] for _ in range(layer.out_features)]
    for e in events:
        xp = e.x + layer.pad_x
        yp = e.y + layer.pad_y
        for f in range(layer.out_features):
            for yk in range(layer.kernel_h):
                if yp - yk < 0 or (yp - yk) % layer.stride_y:
                    continue
                yo = (yp - yk) // layer.stride_y
                if yo >= out_h:
                    continue
                for xk in range(layer.kernel_w):
                    if xp - xk < 0 or (xp - xk) % layer.stride_x:
                        continue
                    xo = (xp - xk) // layer.stride_x
                    if xo >= out_w:
                        continue
                    grid[f][yo][xo] += int(weights[e.c, f, yk, xk])
    return np.asarray(grid, dtype=np.int64)


class NaiveScalarCore:
    """Scalar per-event simulator of one core's full dynamics.

    Membranes live in a dict keyed by (feature, xo, yo); every update is
    explicit integer arithmetic with saturation, threshold handling and the
    lower-bound clamp spelled out.  Weights come in as nested Python lists,
    kill bits as plain sets.
    """

    def __init__(self, layer: LayerConfig, weights: Sequence,
                 bias: Optional[Sequence[int]] = None,
                 kernel_killed: Iterable[tuple] = (),
                 neuron_killed: Iterable[tuple] = ()):
        self.layer = layer
        self.out_w, self.out_h = compute_output_dims(layer)
        self.weights = weights
        self.bias = ([int(b) for b in bias] if bias is not None
                     else [0] * layer.out_features)
        self.kernel_killed = set(kernel_killed)
        self.neuron_killed = set(neuron_killed)
        self.v: dict[tuple[int, int, int], int] = {}

    def _update(self, key: tuple[int, int, int], w: int) -> bool:
        if key in self.neuron_killed:
            return False
        layer = self.layer
        acc = self.v.get(key, 0) + w
        if acc > I16_MAX:
            acc = I16_MAX
        if acc < I16_MIN:
            acc = I16_MIN
        if layer.strict_threshold:
            spiked = acc > layer.threshold
        else:
            spiked = acc >= layer.threshold
        if spiked:
            if layer.reset_mode == "subtract":
                acc = acc - layer.threshold
            else:
                acc = layer.reset_value
        if acc < layer.lower_bound:
            acc = layer.lower_bound
        self.v[key] = acc
        return spiked

    def _route(self, key: tuple[int, int, int]) -> list[FeatureEvent]:
        f, xo, yo = key
        layer = self.layer
        out = []
        for d in layer.destinations:
            out.append(FeatureEvent(f + d.channel_shift,
                                    xo // layer.pool_x, yo // layer.pool_y,
                                    d.target))
        return out

    def process(self, e: FeatureEvent) -> list[FeatureEvent]:
        layer = self.layer
        emitted: list[FeatureEvent] = []
        if layer.fc_mode:
            i = (e.c * layer.in_height + e.y) * layer.in_width + e.x
            for j in range(layer.out_features):
                w = int(self.weights[i][j])
                if w == 0 or (i, j) in self.kernel_killed:
                    continue
                if self._update((j, 0, 0), w):
                    emitted.extend(self._route((j, 0, 0)))
            return emitted
        xp = e.x + layer.pad_x
        yp = e.y + layer.pad_y
        for f in range(layer.out_features):
            for yk in range(layer.kernel_h):
                if yp - yk < 0 or (yp - yk) % layer.stride_y:
                    continue
                yo = (yp - yk) // layer.stride_y
                if yo >= self.out_h:
                    continue
                for xk in range(layer.kernel_w):
                    if xp - xk < 0 or (xp - xk) % layer.stride_x:
                        continue
                    xo = (xp - xk) // layer.stride_x
                    if xo >= self.out_w:
                        continue
                    w = int(self.weights[e.c][f][yk][xk])
                    if w == 0 or (e.c, f, yk, xk) in self.kernel_killed:
                        continue
                    if self._update((f, xo, yo), w):
                        emitted.extend(self._route((f, xo, yo)))
        return emitted

    def leak(self) -> list[FeatureEvent]:
        """One leak tick: bias applied to every live word in ascending
        compressed-address order; zero bias words are skipped."""
        emitted: list[FeatureEvent] = []
        for f in range(self.layer.out_features):
            b = self.bias[f]
            if b == 0:
                continue
            for yo in range(self.out_h):
                for xo in range(self.out_w):
                    if self._update((f, xo, yo), b):
                        emitted.extend(self._route((f, xo, yo)))
        return emitted

    def membrane_grid(self) -> np.ndarray:
        grid = np.zeros((self.layer.out_features, self.out_h, self.out_w), dtype=np.int64)
        for (f, xo, yo), val in self.v.items():
            grid[f, yo, xo] = val
        return grid


__all__ = ["NaiveScalarCore", "naive_scatter_conv", "oracle_frame_conv"]
