"""Event words exchanged between the blocks of the simulated pipeline."""

from __future__ import annotations

from typing import NamedTuple, Optional

DEFAULT_SENSOR_WIDTH = 128
DEFAULT_SENSOR_HEIGHT = 128

# Port names used by the router and the trace.
PREPROC = "preproc"
READOUT = "readout"
MONITOR = "monitor"


def core_port(core_id: int) -> str:
    return f"core{core_id:d}"


def is_core_port(port: str) -> bool:
    return port.startswith("core") and port[4:].isdigit()


class PixelEvent(NamedTuple):
    """Raw sensor event: timestamp in microseconds, pixel coordinates, polarity."""

    t: int
    x: int
    y: int
    p: int


class FeatureEvent(NamedTuple):
    """In-network event: feature channel plus coordinates.

    While in flight the event carries a routing header (`dest`, a port name);
    the router strips it on delivery.
    """

    c: int
    x: int
    y: int
    dest: Optional[str] = None

    def stripped(self) -> "FeatureEvent":
        return FeatureEvent(self.c, self.x, self.y, None)


class MalformedEventError(ValueError):
    """An event violates the bounds of the block it was delivered to."""
