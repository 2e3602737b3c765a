"""Classification readout: per-class accumulation, sliding averages or bin
counts, threshold flags and maximum selection, sampled on an external tick.

Averages are kept exact as (numerator, window length) pairs; a floored
integer view is derived from them.  Outputs latch until the next tick.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .config import ReadoutConfig


@dataclass(frozen=True)
class ReadoutOutput:
    tick_index: int
    values: tuple[int, ...]       # numerators; denominator below
    denominator: int              # window length (1 in bin_count mode)
    over_threshold: tuple[bool, ...]
    max_class: int

    def floor_values(self) -> tuple[int, ...]:
        return tuple(n // self.denominator for n in self.values)


class ReadoutCore:
    """Accumulates class events between ticks and samples on tick."""

    def __init__(self, cfg: ReadoutConfig):
        self.cfg = cfg
        self.n_classes = cfg.n_classes
        self._bin = [0] * cfg.n_classes
        self._window: deque[list[int]] = deque(maxlen=cfg.window)
        self._tick_index = 0
        self.dropped = 0
        self.latched: Optional[ReadoutOutput] = None

    def accumulate(self, c: int) -> bool:
        """Count one event for class c; out-of-range classes are dropped
        and reported via the return value."""
        if not 0 <= c < self.n_classes:
            self.dropped += 1
            return False
        self._bin[c] += 1
        return True

    def on_tick(self) -> ReadoutOutput:
        """Close the current bin, present and hold the sampled values."""
        counts = self._bin
        self._bin = [0] * self.n_classes
        if self.cfg.mode == "bin_count":
            values = tuple(counts)
            denominator = 1
        else:
            # Sliding window; bins before the first tick read as zero.
            self._window.append(counts)
            values = tuple(sum(col) for col in zip(*self._window))
            denominator = self.cfg.window
        if self.cfg.thresholds is not None:
            over = tuple(v >= t * denominator
                         for v, t in zip(values, self.cfg.thresholds))
        else:
            over = (False,) * self.n_classes
        max_class = max(range(self.n_classes), key=lambda i: (values[i], -i))
        out = ReadoutOutput(self._tick_index, values, denominator, over, max_class)
        self._tick_index += 1
        self.latched = out
        return out


__all__ = ["ReadoutCore", "ReadoutOutput"]
