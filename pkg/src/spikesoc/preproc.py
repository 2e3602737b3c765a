"""Sensor event pre-processing pipeline.

Stages run in fixed order: hot-pixel kill, coordinate pooling, ROI cut
(events re-based to a zero origin), mirror/swap transform, polarity
handling, and finally source mapping onto up to two destinations.  Every
stage is a pure function of (event, config); an event dropped by any stage
yields an empty output list.
"""

from __future__ import annotations

from typing import Optional

from .config import PreprocConfig
from .events import FeatureEvent, MalformedEventError, MONITOR, PixelEvent


def filter_hot_pixel(e: PixelEvent, cfg: PreprocConfig) -> Optional[PixelEvent]:
    """Drop events from pixels whose kill switch is set."""
    if (e.x, e.y) in cfg.kill_mask:
        return None
    return e


def apply_pooling(e: PixelEvent, cfg: PreprocConfig) -> PixelEvent:
    """Scale the coordinate space down by the per-axis pooling factors."""
    if cfg.pool_x == 1 and cfg.pool_y == 1:
        return e
    return PixelEvent(e.t, e.x // cfg.pool_x, e.y // cfg.pool_y, e.p)


def apply_roi(e: PixelEvent, cfg: PreprocConfig) -> Optional[PixelEvent]:
    """Cut the configured patch; survivors are re-based to a zero origin."""
    x0, y0, w, h = cfg.roi
    if not (x0 <= e.x < x0 + w and y0 <= e.y < y0 + h):
        return None
    return PixelEvent(e.t, e.x - x0, e.y - y0, e.p)


def apply_transform(e: PixelEvent, cfg: PreprocConfig, width: int, height: int) -> PixelEvent:
    """Mirror x, then mirror y, then swap the axes (in that order)."""
    x, y = e.x, e.y
    if cfg.mirror_x:
        x = width - 1 - x
    if cfg.mirror_y:
        y = height - 1 - y
    if cfg.swap_xy:
        x, y = y, x
    return PixelEvent(e.t, x, y, e.p)


def apply_polarity(e: PixelEvent, cfg: PreprocConfig) -> Optional[FeatureEvent]:
    """Map polarity onto the feature channel, or filter by polarity."""
    mode = cfg.polarity_mode
    if mode == "both_channels":
        return FeatureEvent(e.p, e.x, e.y)
    if mode == "merged":
        return FeatureEvent(0, e.x, e.y)
    if mode == "on_only":
        return FeatureEvent(0, e.x, e.y) if e.p == 1 else None
    if mode == "off_only":
        return FeatureEvent(0, e.x, e.y) if e.p == 0 else None
    raise ValueError(f"unknown polarity mode {mode!r}")


def map_sources(e: FeatureEvent, cfg: PreprocConfig) -> list[FeatureEvent]:
    """One copy per destination, header attached, channel shifted."""
    return [FeatureEvent(e.c + d.channel_shift, e.x, e.y, d.target)
            for d in cfg.destinations]


def preprocess_stages(e: PixelEvent, cfg: PreprocConfig) -> Optional[FeatureEvent]:
    """Stages 1..5 (everything except source mapping).

    Returns the pre-processed event in the network's input coordinate
    space, or None if any stage dropped it.
    """
    if not (0 <= e.x < cfg.sensor_width and 0 <= e.y < cfg.sensor_height):
        raise MalformedEventError(
            f"pixel ({e.x},{e.y}) outside the {cfg.sensor_width}x{cfg.sensor_height} sensor")
    if e.p not in (0, 1):
        raise MalformedEventError(f"polarity {e.p} not in {{0, 1}}")
    kept = filter_hot_pixel(e, cfg)
    if kept is None:
        return None
    pooled = apply_pooling(kept, cfg)
    cut = apply_roi(pooled, cfg)
    if cut is None:
        return None
    _, _, w, h = cfg.roi
    oriented = apply_transform(cut, cfg, w, h)
    return apply_polarity(oriented, cfg)


def preprocess(e: PixelEvent, cfg: PreprocConfig) -> list[FeatureEvent]:
    """Full pipeline: returns the routed copies (one per destination)."""
    fe = preprocess_stages(e, cfg)
    if fe is None:
        return []
    return map_sources(fe, cfg)


def monitor_copy(fe: FeatureEvent) -> FeatureEvent:
    """Observer-stream duplicate of a pre-processed event (monitor tap)."""
    return FeatureEvent(fe.c, fe.x, fe.y, MONITOR)


__all__ = [
    "apply_polarity", "apply_pooling", "apply_roi", "apply_transform",
    "filter_hot_pixel", "map_sources", "monitor_copy", "preprocess",
    "preprocess_stages",
]
