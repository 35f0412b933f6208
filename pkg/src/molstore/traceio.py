"""Current-trace file formats.

Text format: a header line ``sample_rate_hz=<integer>`` followed by one
decimal pA value per line.  Binary format: magic ``MTRC``, little-endian
u32 version (1), f64 sample rate, u64 sample count, then float32 samples.
"""

from __future__ import annotations

import struct

import numpy as np

from .poresim import CurrentTrace

MAGIC = b"MTRC"
VERSION = 1
_HEADER = struct.Struct("<4sIdQ")


class TraceFormatError(ValueError):
    """Malformed trace file."""


def write_trace_text(trace: CurrentTrace, path: str) -> None:
    rate = trace.sample_rate_hz
    if rate != int(rate):
        raise TraceFormatError("text format stores an integer sample rate")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"sample_rate_hz={int(rate)}\n")
        fh.writelines(f"{value:.6f}\n" for value in trace.samples)


def read_trace_text(path: str) -> CurrentTrace:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith("sample_rate_hz="):
            raise TraceFormatError("missing sample_rate_hz header line")
        try:
            rate = int(header.split("=", 1)[1])
        except ValueError as exc:
            raise TraceFormatError(f"bad sample rate in header: {header!r}") from exc
        if rate <= 0:
            raise TraceFormatError("sample rate must be positive")
        body = fh.read().split()
        try:
            samples = np.array(body, dtype=np.float64)
        except ValueError as exc:
            raise TraceFormatError(f"bad sample value: {exc}") from exc
    return CurrentTrace(float(rate), samples)


def write_trace_binary(trace: CurrentTrace, path: str) -> None:
    samples = np.asarray(trace.samples, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, float(trace.sample_rate_hz), samples.size))
        fh.write(samples.tobytes())


def read_trace_binary(path: str) -> CurrentTrace:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TraceFormatError("truncated header")
        magic, version, rate, count = _HEADER.unpack(header)
        if magic != MAGIC:
            raise TraceFormatError(f"bad magic {magic!r}; expected {MAGIC!r}")
        if version != VERSION:
            raise TraceFormatError(f"unsupported version {version}")
        if rate <= 0:
            raise TraceFormatError("sample rate must be positive")
        payload = fh.read(count * 4)
        if len(payload) < count * 4:
            raise TraceFormatError(
                f"truncated samples: header promises {count}, file holds fewer"
            )
    samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return CurrentTrace(rate, samples)


def write_trace(trace: CurrentTrace, path: str, fmt: str) -> None:
    if fmt == "text":
        write_trace_text(trace, path)
    elif fmt == "binary":
        write_trace_binary(trace, path)
    else:
        raise TraceFormatError(f"unknown trace format {fmt!r}")


def read_trace(path: str, fmt: str | None = None) -> CurrentTrace:
    """Read a trace file; sniffs the format from the magic when not given."""
    if fmt is None:
        with open(path, "rb") as fh:
            fmt = "binary" if fh.read(4) == MAGIC else "text"
    if fmt == "binary":
        return read_trace_binary(path)
    if fmt == "text":
        return read_trace_text(path)
    raise TraceFormatError(f"unknown trace format {fmt!r}")
