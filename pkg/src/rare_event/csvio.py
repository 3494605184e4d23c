"""Reading and writing the ``tick,<features...>,event`` CSV format.

Grammar:

* first line is the header ``tick,<name_1>,...,<name_d>,event`` with ``d >= 1``;
* every following line has exactly ``d + 2`` comma-separated cells;
* ``tick`` is an integer, each one exactly one greater than the previous;
* feature cells are decimal floats, or empty for a missing reading;
* ``event`` is ``0`` or ``1``.

Blank lines are ignored. Line numbers in errors count the header as line 1.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .errors import BadEventValue, NonUniformTicks, ParseError
from .timeseries import TimeSeries


def parse_csv(text: str, tick_minutes: int = 60) -> tuple[TimeSeries, list[str]]:
    """Parse CSV text into a series plus the feature names from the header."""
    rows = csv.reader(io.StringIO(text))
    header = None
    ticks: list[int] = []
    values: list[list[float]] = []
    events: list[int] = []
    for lineno, row in enumerate(rows, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = [c.strip() for c in row]
            if len(header) < 3 or header[0] != "tick" or header[-1] != "event":
                raise ParseError("header must read 'tick,<features...>,event'", lineno)
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", lineno)
        try:
            tick = int(row[0].strip())
        except ValueError:
            raise ParseError(f"tick {row[0]!r} is not an integer", lineno) from None
        if ticks and tick != ticks[-1] + 1:
            raise NonUniformTicks(
                f"tick {tick} follows {ticks[-1]}; ticks must increase by exactly 1", lineno
            )
        feats = []
        for name, cell in zip(header[1:-1], row[1:-1]):
            cell = cell.strip()
            if cell == "":
                feats.append(math.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{name}: {cell!r} is not a number", lineno) from None
            if not math.isfinite(v):
                raise ParseError(f"{name}: non-finite value {cell!r}", lineno)
            feats.append(v)
        ev = row[-1].strip()
        if ev not in ("0", "1"):
            raise BadEventValue(f"event must be 0 or 1, found {ev!r}", lineno)
        ticks.append(tick)
        values.append(feats)
        events.append(int(ev))
    if header is None:
        raise ParseError("empty file", 1)
    if not ticks:
        raise ParseError("no data rows", 2)
    series = TimeSeries(
        np.array(values, dtype=float),
        np.array(events, dtype=np.int8),
        tick_minutes=tick_minutes,
        first_tick=ticks[0],
    )
    return series, header[1:-1]


def ingest_csv(path, tick_minutes: int = 60) -> TimeSeries:
    text = Path(path).read_text(encoding="utf-8")
    return parse_csv(text, tick_minutes)[0]


def format_csv(series: TimeSeries, names: list[str] | None = None) -> str:
    """Inverse of :func:`parse_csv`; floats use ``repr`` so values round-trip."""
    d = series.n_features
    names = names or [f"x{j + 1}" for j in range(d)]
    out = io.StringIO()
    out.write(",".join(["tick", *names, "event"]) + "\n")
    for i in range(series.n_ticks):
        cells = ["" if math.isnan(v) else repr(float(v)) for v in series.features[i]]
        out.write(f"{series.first_tick + i},{','.join(cells)},{int(series.events[i])}\n")
    return out.getvalue()


def write_csv(series: TimeSeries, path, names: list[str] | None = None) -> None:
    Path(path).write_text(format_csv(series, names), encoding="utf-8")
