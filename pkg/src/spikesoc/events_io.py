"""Event stream files and weight blobs.

Event streams come as hand-editable CSV ("t,x,y,p" with microsecond
timestamps, '#' comments allowed) or as a compact little-endian binary
format: header magic "SPKE", version, sensor width/height and event count,
then one (u64 t, u16 x, u16 y, u8 p) record per event.  Kernel, bias and
neuron memory contents travel in "SPKW" blobs.  Both formats are documented
in docs/file_formats.md.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

from .events import PixelEvent

EVENT_MAGIC = b"SPKE"
WEIGHT_MAGIC = b"SPKW"
FORMAT_VERSION = 1

_EVENT_HEADER = struct.Struct("<4sHHHQ")   # magic, version, width, height, count
_EVENT_RECORD = struct.Struct("<QHHB")     # t, x, y, p
_WEIGHT_HEADER = struct.Struct("<4sHBB")   # magic, version, kind, ndims

_WEIGHT_KINDS = {"kernel": 0, "bias": 1, "neuron": 2}
_WEIGHT_DTYPES = {"kernel": np.int8, "bias": np.int16, "neuron": np.int16}


class EventFormatError(ValueError):
    def __init__(self, path, msg: str, line: Optional[int] = None,
                 offset: Optional[int] = None):
        at = ""
        if line is not None:
            at = f", line {line}"
        elif offset is not None:
            at = f", offset {offset}"
        super().__init__(f"{path}{at}: {msg}")
        self.path = str(path)
        self.line = line
        self.offset = offset


def infer_format(path: Path | str) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".bin", ".spke"):
        return "binary"
    raise EventFormatError(path, "cannot infer format from suffix; pass --format")


def read_events(path: Path | str, fmt: Optional[str] = None,
                allow_unsorted: bool = False) -> Iterator[PixelEvent]:
    """Yield events in file order; non-monotone timestamps are rejected
    unless allow_unsorted, which stable-sorts by timestamp instead."""
    fmt = fmt or infer_format(path)
    if not Path(path).is_file():
        raise FileNotFoundError(str(path))
    if fmt == "csv":
        stream = _read_csv(path)
    elif fmt == "binary":
        stream = _read_binary(path)
    else:
        raise EventFormatError(path, f"unknown format {fmt!r}")
    if allow_unsorted:
        return iter(sorted(stream, key=lambda e: e.t))
    return _check_sorted(path, stream)


def _check_sorted(path, stream: Iterator[PixelEvent]) -> Iterator[PixelEvent]:
    prev = None
    for i, ev in enumerate(stream):
        if prev is not None and ev.t < prev:
            raise EventFormatError(
                path, f"timestamp {ev.t} after {prev} (record {i}); "
                      "pass --allow-unsorted to sort", line=None)
        prev = ev.t
        yield ev


def _read_csv(path) -> Iterator[PixelEvent]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise EventFormatError(path, f"expected 4 fields, got {len(parts)}", line=lineno)
            try:
                t, x, y, p = (int(part) for part in parts)
            except ValueError:
                raise EventFormatError(path, f"non-integer field in {line!r}", line=lineno) from None
            if t < 0 or x < 0 or y < 0:
                raise EventFormatError(path, "negative timestamp or coordinate", line=lineno)
            if p not in (0, 1):
                raise EventFormatError(path, f"polarity {p} out of {{0, 1}}", line=lineno)
            yield PixelEvent(t, x, y, p)


def _read_binary(path) -> Iterator[PixelEvent]:
    with open(path, "rb") as fh:
        header = fh.read(_EVENT_HEADER.size)
        if len(header) != _EVENT_HEADER.size:
            raise EventFormatError(path, "truncated header", offset=0)
        magic, version, _width, _height, count = _EVENT_HEADER.unpack(header)
        if magic != EVENT_MAGIC:
            raise EventFormatError(path, f"bad magic {magic!r}", offset=0)
        if version != FORMAT_VERSION:
            raise EventFormatError(path, f"unsupported version {version}", offset=4)
        for i in range(count):
            offset = _EVENT_HEADER.size + i * _EVENT_RECORD.size
            raw = fh.read(_EVENT_RECORD.size)
            if len(raw) != _EVENT_RECORD.size:
                raise EventFormatError(path, f"truncated record {i}", offset=offset)
            t, x, y, p = _EVENT_RECORD.unpack(raw)
            if p not in (0, 1):
                raise EventFormatError(path, f"polarity {p} out of {{0, 1}}", offset=offset)
            yield PixelEvent(t, x, y, p)
        if fh.read(1):
            raise EventFormatError(path, f"trailing bytes after {count} records")


def write_events(path: Path | str, events: Iterable[PixelEvent],
                 fmt: Optional[str] = None,
                 sensor: tuple[int, int] = (128, 128)) -> int:
    fmt = fmt or infer_format(path)
    events = list(events)
    if fmt == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            for ev in events:
                fh.write(f"{ev.t},{ev.x},{ev.y},{ev.p}\n")
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_EVENT_HEADER.pack(EVENT_MAGIC, FORMAT_VERSION,
                                        sensor[0], sensor[1], len(events)))
            for ev in events:
                fh.write(_EVENT_RECORD.pack(ev.t, ev.x, ev.y, ev.p))
    else:
        raise EventFormatError(path, f"unknown format {fmt!r}")
    return len(events)


def write_weight_blob(path: Path | str, kind: str, array: np.ndarray) -> None:
    if kind not in _WEIGHT_KINDS:
        raise ValueError(f"unknown blob kind {kind!r}")
    arr = np.ascontiguousarray(array, dtype=_WEIGHT_DTYPES[kind])
    if arr.ndim > 255 or any(d > 0xFFFF for d in arr.shape):
        raise ValueError("blob dimensions do not fit the header")
    with open(path, "wb") as fh:
        fh.write(_WEIGHT_HEADER.pack(WEIGHT_MAGIC, FORMAT_VERSION,
                                     _WEIGHT_KINDS[kind], arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}H", *arr.shape))
        little = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        fh.write(little.tobytes())


def read_weight_blob(path: Path | str) -> tuple[str, np.ndarray]:
    with open(path, "rb") as fh:
        header = fh.read(_WEIGHT_HEADER.size)
        if len(header) != _WEIGHT_HEADER.size:
            raise EventFormatError(path, "truncated blob header", offset=0)
        magic, version, kind_code, ndims = _WEIGHT_HEADER.unpack(header)
        if magic != WEIGHT_MAGIC:
            raise EventFormatError(path, f"bad magic {magic!r}", offset=0)
        if version != FORMAT_VERSION:
            raise EventFormatError(path, f"unsupported version {version}", offset=4)
        kinds = {code: name for name, code in _WEIGHT_KINDS.items()}
        if kind_code not in kinds:
            raise EventFormatError(path, f"unknown blob kind {kind_code}", offset=6)
        kind = kinds[kind_code]
        dims_raw = fh.read(2 * ndims)
        if len(dims_raw) != 2 * ndims:
            raise EventFormatError(path, "truncated dimension list")
        shape = struct.unpack(f"<{ndims}H", dims_raw)
        dtype = np.dtype(_WEIGHT_DTYPES[kind]).newbyteorder("<")
        expected = int(np.prod(shape)) * dtype.itemsize
        payload = fh.read()
        if len(payload) != expected:
            raise EventFormatError(
                path, f"payload is {len(payload)} bytes, header implies {expected}")
        arr = np.frombuffer(payload, dtype=dtype).reshape(shape)
        return kind, arr.astype(_WEIGHT_DTYPES[kind])


__all__ = [
    "EventFormatError", "infer_format", "read_events", "read_weight_blob",
    "write_events", "write_weight_blob",
]
