"""Randomized oracle-equivalence suites.

Two regimes: the linearity suite drives random small layers with an
unreachable threshold and demands exact integer equality between the
event-driven membrane state and the dense frame convolution; the
thresholded suite runs full dynamics (thresholds, resets, clamps, leaks,
kill bits) against the scalar simulator and demands identical output event
sequences stimulus by stimulus.

Every trial derives its generator from (seed, trial index), so any
counterexample is reproducible from the printed pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import Destination, LayerConfig, I16_MAX, I16_MIN, compute_output_dims
from .convcore import CoreState
from .events import FeatureEvent
from .oracles import NaiveScalarCore, naive_scatter_conv, oracle_frame_conv

# Caps chosen so that <= MAX_EVENTS full-range int8 updates can never reach
# the saturation rails, keeping the linear regime genuinely linear.
MAX_EVENTS = 250

KERNEL_CHOICES = (1, 3, 5, 7, 16)
STRIDE_CHOICES = (1, 2)
PAD_CHOICES = (0, 1, 2)


@dataclass(frozen=True)
class Counterexample:
    suite: str
    trial: int
    seed: int
    detail: str

    def __str__(self) -> str:
        return (f"{self.suite} mismatch at trial {self.trial} "
                f"(reproduce with seed={self.seed}, trial={self.trial}): {self.detail}")


def _trial_rng(seed: int, trial: int, suite: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, trial, suite)))


def _random_linear_layer(rng: np.random.Generator, max_dim: int) -> LayerConfig:
    k = int(rng.choice(KERNEL_CHOICES))
    sx = int(rng.choice(STRIDE_CHOICES))
    sy = int(rng.choice(STRIDE_CHOICES))
    px = int(rng.choice(PAD_CHOICES))
    py = int(rng.choice(PAD_CHOICES))
    in_lo_x = max(1, k - 2 * px)
    in_lo_y = max(1, k - 2 * py)
    return LayerConfig(
        core_id=0,
        in_channels=int(rng.integers(1, 5)),
        out_features=int(rng.integers(1, 9)),
        in_width=int(rng.integers(in_lo_x, max(in_lo_x, max_dim) + 1)),
        in_height=int(rng.integers(in_lo_y, max(in_lo_y, max_dim) + 1)),
        kernel_w=k,
        kernel_h=k,
        stride_x=sx,
        stride_y=sy,
        pad_x=px,
        pad_y=py,
        threshold=I16_MAX,           # unreachable under the event cap
        lower_bound=I16_MIN,
    )


def _random_events(rng: np.random.Generator, layer: LayerConfig, count: int) -> list[FeatureEvent]:
    return [
        FeatureEvent(int(rng.integers(0, layer.in_channels)),
                     int(rng.integers(0, layer.in_width)),
                     int(rng.integers(0, layer.in_height)))
        for _ in range(count)
    ]


def run_linearity_suite(trials: int, seed: int, *, max_dim: int = 16,
                        backend=None, crosscheck_every: int = 20,
                        ) -> Optional[Counterexample]:
    """Event-driven membrane state vs dense frame convolution, exact.

    Every `crosscheck_every`-th trial also replays the slow per-event
    scatter loop against the frame oracle.
    """
    for trial in range(trials):
        rng = _trial_rng(seed, trial)
        layer = _random_linear_layer(rng, max_dim)
        shape = (layer.in_channels, layer.out_features, layer.kernel_h, layer.kernel_w)
        layer.weights = rng.integers(-128, 127, size=shape, endpoint=True).astype(np.int8)
        events = _random_events(rng, layer, int(rng.integers(0, MAX_EVENTS + 1)))

        core = CoreState.from_layer(layer, backend=backend)
        for e in events:
            core.process_event(e)
        got = core.v.astype(np.int64).reshape(layer.out_features, core.out_h, core.out_w)
        want = oracle_frame_conv(events, layer, layer.weights)
        if not np.array_equal(got, want):
            bad = np.argwhere(got != want)[0]
            return Counterexample(
                "linearity", trial, seed,
                f"membrane[{tuple(int(i) for i in bad)}] = "
                f"{int(got[tuple(bad)])}, frame oracle says {int(want[tuple(bad)])} "
                f"(layer K={layer.kernel_w} s={layer.stride_x},{layer.stride_y} "
                f"p={layer.pad_x},{layer.pad_y} in={layer.in_width}x{layer.in_height})")
        if core.spikes:
            return Counterexample("linearity", trial, seed,
                                  f"{core.spikes} spikes under unreachable threshold")
        if crosscheck_every and trial % crosscheck_every == 0:
            scatter = naive_scatter_conv(events, layer, layer.weights)
            if not np.array_equal(scatter, want):
                return Counterexample("linearity", trial, seed,
                                      "scatter loop disagrees with frame oracle")
    return None


def _random_dynamic_layer(rng: np.random.Generator) -> LayerConfig:
    fc = bool(rng.integers(0, 5) == 0)
    n_dests = int(rng.integers(1, 3))
    dests = tuple(Destination(f"core{i + 1}", int(rng.integers(0, 8))) for i in range(n_dests))
    if fc:
        layer = LayerConfig(
            core_id=0,
            in_channels=int(rng.integers(1, 4)),
            out_features=int(rng.integers(1, 7)),
            in_width=int(rng.integers(1, 5)),
            in_height=int(rng.integers(1, 5)),
            fc_mode=True,
            threshold=int(rng.integers(1, 80)),
            destinations=dests,
        )
    else:
        k = int(rng.choice((1, 2, 3, 5)))
        px = int(rng.choice(PAD_CHOICES))
        py = int(rng.choice(PAD_CHOICES))
        in_lo_x = max(1, k - 2 * px)
        in_lo_y = max(1, k - 2 * py)
        layer = LayerConfig(
            core_id=0,
            in_channels=int(rng.integers(1, 4)),
            out_features=int(rng.integers(1, 7)),
            in_width=int(rng.integers(in_lo_x, 13)),
            in_height=int(rng.integers(in_lo_y, 13)),
            kernel_w=k,
            kernel_h=k,
            stride_x=int(rng.choice(STRIDE_CHOICES)),
            stride_y=int(rng.choice(STRIDE_CHOICES)),
            pad_x=px,
            pad_y=py,
            threshold=int(rng.integers(1, 80)),
            pool_x=int(rng.choice((1, 2))),
            pool_y=int(rng.choice((1, 2))),
            destinations=dests,
        )
    layer.strict_threshold = bool(rng.integers(0, 2))
    if rng.integers(0, 2):
        layer.reset_mode = "reset"
        layer.reset_value = int(rng.integers(-20, 21))
    layer.lower_bound = int(rng.choice((0, -10, I16_MIN)))
    return layer


def run_threshold_suite(trials: int, seed: int, *, backend=None,
                        ) -> Optional[Counterexample]:
    """Full dynamics vs the scalar simulator: output event sequences must
    match stimulus for stimulus, and final membranes must agree."""
    for trial in range(trials):
        rng = _trial_rng(seed, trial, suite=1)
        layer = _random_dynamic_layer(rng)
        if layer.fc_mode:
            shape = (layer.fc_inputs, layer.out_features, 1, 1)
        else:
            shape = (layer.in_channels, layer.out_features, layer.kernel_h, layer.kernel_w)
        layer.weights = rng.integers(-128, 127, size=shape, endpoint=True).astype(np.int8)
        layer.leak_enabled = bool(rng.integers(0, 2))
        bias = rng.integers(-3, 4, size=layer.out_features).astype(np.int16)
        layer.bias = bias if layer.leak_enabled else None

        n_kernel_kill = int(rng.integers(0, 4))
        kkill = set()
        for _ in range(n_kernel_kill):
            kkill.add((int(rng.integers(0, shape[0])), int(rng.integers(0, shape[1])),
                       int(rng.integers(0, shape[2])), int(rng.integers(0, shape[3]))))
        layer.kernel_kill = tuple(sorted(kkill))

        core = CoreState.from_layer(layer, backend=backend)
        if layer.fc_mode:
            naive_w = layer.weights.reshape(layer.fc_inputs, layer.out_features).tolist()
            naive_kk = {(i, j) for i, j, _, _ in kkill}
        else:
            naive_w = layer.weights.tolist()
            naive_kk = kkill
        naive = NaiveScalarCore(layer, naive_w, bias=bias if layer.leak_enabled else None,
                                kernel_killed=naive_kk)

        n_stimuli = int(rng.integers(20, 120))
        for step in range(n_stimuli):
            if layer.leak_enabled and rng.integers(0, 8) == 0:
                got = core.leak_tick()
                want = naive.leak()
                what = f"leak at step {step}"
            else:
                e = _random_events(rng, layer, 1)[0]
                got = core.process_event(e)
                want = naive.process(e)
                what = f"event {e} at step {step}"
            if got != want:
                return Counterexample(
                    "thresholded", trial, seed,
                    f"{what}: implementation emitted {got}, scalar simulator {want}")

        got_grid = core.v.astype(np.int64).reshape(layer.out_features, core.out_h, core.out_w)
        if not np.array_equal(got_grid, naive.membrane_grid()):
            return Counterexample("thresholded", trial, seed,
                                  "final membranes diverge after matching spike sequences")
    return None


def brute_force_targets(e: FeatureEvent, layer: LayerConfig) -> set[tuple[int, int, int, int, int]]:
    """Output-side enumeration of the sweep set: every (f, xo, yo, xk, yk)
    with the kernel offset derived from the output coordinate.  Used as the
    independent oracle for sweep_targets."""
    out_w, out_h = compute_output_dims(layer)
    xp = e.x + layer.pad_x
    yp = e.y + layer.pad_y
    found = set()
    for f in range(layer.out_features):
        for yo in range(out_h):
            yk = yp - yo * layer.stride_y
            if not 0 <= yk < layer.kernel_h:
                continue
            for xo in range(out_w):
                xk = xp - xo * layer.stride_x
                if not 0 <= xk < layer.kernel_w:
                    continue
                found.add((f, xo, yo, xk, yk))
    return found


__all__ = [
    "Counterexample", "brute_force_targets", "run_linearity_suite",
    "run_threshold_suite",
]
