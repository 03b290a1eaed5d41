"""Readers and writers for voltage-trace CSVs, message logs and tidy outputs.

Voltage trace CSV: header ``Index,Time (s),Voltage (V),Word``; traces are
stacked vertically, ``Index`` counts rows from 0 and ``Word`` numbers the
traces from 1. Negative times are samples before the trigger.

Message log CSV: header ``Time (s),Word`` followed by ``seconds,HEX8``
rows.

Floats are written with ``repr`` (shortest round-trip form), so output is
byte-identical for identical inputs. Readers reject malformed input rather
than repair it.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

import numpy as np

from . import codec
from .errors import (
    DecreasingTimestampError,
    MalformedHeaderError,
    MalformedHexError,
    MessageLogError,
    NonContiguousIndexError,
    NonMonotonicTimeError,
    TraceFormatError,
)
from .scenario import load_scenario, save_scenario  # noqa: F401  (re-exported)
from .waveform import VoltageTrace

TRACE_HEADER = ("Index", "Time (s)", "Voltage (V)", "Word")
INDEX_SPELLINGS = ("Index", "[Index]")
LOG_HEADER = ("Time (s)", "Word")

PathOrFile = Union[str, Path, IO[str]]


def _fmt(x: float) -> str:
    return repr(float(x))


def _open_read(src: PathOrFile):
    if isinstance(src, (str, Path)):
        return open(src, newline="")
    return src


def _write_text(dst: PathOrFile, text: str) -> None:
    if isinstance(dst, (str, Path)):
        with open(dst, "w", newline="") as fh:
            fh.write(text)
    else:
        dst.write(text)


# --- voltage traces ------------------------------------------------------


def format_trace_csv(traces: Sequence[VoltageTrace]) -> str:
    if not traces:
        raise ValueError("no traces to write")
    lines = [",".join(TRACE_HEADER)]
    index = 0
    for word_no, tr in enumerate(traces, start=1):
        for t, v in zip(tr.times.tolist(), tr.voltages.tolist()):
            lines.append(f"{index},{_fmt(t)},{_fmt(v)},{word_no}")
            index += 1
    return "\n".join(lines) + "\n"


def write_trace_csv(traces: Sequence[VoltageTrace], dst: PathOrFile) -> None:
    """Write traces stacked in list order; ``Word`` is the 1-based position."""
    _write_text(dst, format_trace_csv(traces))


def _infer_rate(times: np.ndarray) -> float:
    if times.size < 2:
        raise TraceFormatError("a trace needs at least two samples")
    dt = float(np.median(np.diff(times)))
    # trimmed to 9 significant digits to absorb float noise in the time column
    return float(f"{1.0 / dt:.9g}")


def read_trace_csv(src: PathOrFile) -> list[VoltageTrace]:
    """Parse a stacked trace CSV into one :class:`VoltageTrace` per ``Word``."""
    fh = _open_read(src)
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedHeaderError("empty file")
        header = [h.strip() for h in header]
        if (
            len(header) != 4
            or header[0] not in INDEX_SPELLINGS
            or tuple(header[1:]) != TRACE_HEADER[1:]
        ):
            raise MalformedHeaderError(f"unexpected header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise TraceFormatError(f"line {lineno}: expected 4 columns, got {len(row)}")
            try:
                rows.append((int(row[0]), float(row[1]), float(row[2]), int(row[3])))
            except ValueError as exc:
                raise TraceFormatError(f"line {lineno}: {exc}") from exc
    finally:
        if fh is not src:
            fh.close()

    if not rows:
        return []
    idx = np.array([r[0] for r in rows])
    if not np.array_equal(idx, np.arange(len(rows))):
        bad = int(np.flatnonzero(idx != np.arange(len(rows)))[0])
        raise NonContiguousIndexError(f"row {bad}: Index {idx[bad]} (expected {bad})")
    times = np.array([r[1] for r in rows])
    volts = np.array([r[2] for r in rows])
    words = np.array([r[3] for r in rows])
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(volts))):
        raise TraceFormatError("non-finite Time or Voltage value")
    if words[0] < 1 or np.any(np.diff(words) < 0):
        raise TraceFormatError("Word column must start at 1 and never decrease")

    traces = []
    bounds = np.flatnonzero(np.diff(words)) + 1
    for seg in np.split(np.arange(len(rows)), bounds):
        t = times[seg]
        if np.any(np.diff(t) <= 0):
            raise NonMonotonicTimeError(f"Word {words[seg[0]]}: time is not strictly increasing")
        traces.append(VoltageTrace(_infer_rate(t), t, volts[seg], int(words[seg[0]])))
    return traces


# --- message logs ----------------------------------------------------------


def format_message_log(entries: Iterable[tuple[float, int]]) -> str:
    lines = [",".join(LOG_HEADER)]
    for ts, word in entries:
        lines.append(f"{_fmt(ts)},{codec.word_hex(word)}")
    return "\n".join(lines) + "\n"


def write_message_log(entries: Iterable[tuple[float, int]], dst: PathOrFile) -> None:
    _write_text(dst, format_message_log(entries))


def read_message_log(src: PathOrFile) -> list[tuple[float, int]]:
    """Parse ``seconds,HEX8`` rows; the header line is optional."""
    fh = _open_read(src)
    try:
        text = fh.read()
    finally:
        if fh is not src:
            fh.close()
    out: list[tuple[float, int]] = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if lineno == 1 and tuple(parts) == LOG_HEADER:
            continue
        if len(parts) != 2:
            raise MessageLogError(f"line {lineno}: expected 'seconds,HEX8'")
        try:
            word = codec.parse_hex(parts[1])
        except MalformedHexError as exc:
            raise MalformedHexError(f"line {lineno}: {exc}") from None
        try:
            ts = float(parts[0])
        except ValueError:
            raise MessageLogError(f"line {lineno}: bad timestamp {parts[0]!r}") from None
        if not math.isfinite(ts):
            raise MessageLogError(f"line {lineno}: non-finite timestamp")
        if out and ts < out[-1][0]:
            raise DecreasingTimestampError(f"line {lineno}: timestamp {ts} < {out[-1][0]}")
        out.append((ts, word))
    return out


# --- tidy outputs for external plotting ----------------------------------


def write_rows(header: Sequence[str], rows: Iterable[Sequence], dst: PathOrFile) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) if isinstance(x, float) else x for x in row])
    _write_text(dst, buf.getvalue())
