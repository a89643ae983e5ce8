"""Dataset files and the embedded example datasets.

Two CSV layouts are accepted, told apart by their header:

* frequency: ``x,frequency`` for uncensored counts;
* censored: ``x,events,censored`` for failures and right-censorings per time.

A life-table layout ``sessions,T,at_risk,events,censoring_indicator`` is
also read. There the censoring counts are implied by the drop in the at-risk
column, ``q_k = N_k - d_k - N_{k+1}``, and must be zero on rows whose
indicator is 0.
"""

from __future__ import annotations

import csv
import hashlib
import io
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError
from .samples import CensoredSample, UncensoredSample

__all__ = ["EMBEDDED", "DIGESTS", "ingest", "read_csv_text", "embedded_text", "digest", "life_table_to_sample"]

EMBEDDED = {
    "computer-breaks": "computer_breaks.csv",
    "pain-relief": "pain_relief.csv",
}
DIGESTS = {
    "computer-breaks": "faa7494706e6873f0101a92c2f966c5b2ea7bc06cbbadb9becc61a6d4eaab3ad",
    "pain-relief": "6a9cc63c8e9b400fdf8bf47687b66387f5a6b4bc98966576c530faa0180a7932",
}

FREQUENCY = ("x", "frequency")
CENSORED = ("x", "events", "censored")
LIFE_TABLE = ("sessions", "T", "at_risk", "events", "censoring_indicator")


def embedded_text(key: str) -> str:
    try:
        name = EMBEDDED[key]
    except KeyError:
        raise DataError(f"unknown embedded dataset {key!r}; known: {sorted(EMBEDDED)}") from None
    return resources.files("dislog").joinpath("data", name).read_text(encoding="utf-8")


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _int(field: str, line: int, column: str) -> int:
    try:
        value = float(field)
    except ValueError:
        raise DataError(f"{column} is not a number: {field!r}", line=line) from None
    if not np.isfinite(value) or value != int(value):
        raise DataError(f"{column} must be an integer, got {field!r}", line=line)
    return int(value)


def _rows(text: str):
    reader = csv.reader(io.StringIO(text))
    header = None
    rows = []
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if header is None:
            header = tuple(cells)
            width = len(header)
            continue
        if len(cells) != width:
            raise DataError(f"expected {width} fields, found {len(cells)}", line=lineno)
        rows.append((lineno, cells))
    if header is None:
        raise DataError("file is empty")
    if not rows:
        raise DataError("no data rows", line=1)
    return header, rows


def read_csv_text(text: str):
    """Parse CSV text into an :class:`UncensoredSample` or :class:`CensoredSample`."""
    header, rows = _rows(text)
    if header == FREQUENCY:
        values, counts, seen = [], [], {}
        for line, (xs, fs) in rows:
            x = _int(xs, line, "x")
            f = _int(fs, line, "frequency")
            if x < 0:
                raise DataError("x must be nonnegative", line=line)
            if f <= 0:
                raise DataError("frequency must be positive", line=line)
            if x in seen:
                raise DataError(f"duplicate x={x} (first on line {seen[x]})", line=line)
            seen[x] = line
            values.append(x)
            counts.append(f)
        return UncensoredSample(np.array(values), np.array(counts))
    if header == CENSORED:
        x, d, q = [], [], []
        for line, (xs, ds, qs) in rows:
            xv, dv, qv = _int(xs, line, "x"), _int(ds, line, "events"), _int(qs, line, "censored")
            if xv < 0 or dv < 0 or qv < 0:
                raise DataError("values must be nonnegative", line=line)
            if x and xv <= x[-1]:
                raise DataError("x must be strictly increasing", line=line)
            if dv + qv == 0:
                raise DataError("row has neither events nor censorings", line=line)
            x.append(xv)
            d.append(dv)
            q.append(qv)
        return CensoredSample(np.array(x), np.array(d), np.array(q))
    if header == LIFE_TABLE:
        parsed = []
        for line, cells in rows:
            s, t, n, d, c = (_int(v, line, col) for v, col in zip(cells, LIFE_TABLE))
            parsed.append((line, t, n, d, c))
        return life_table_to_sample(parsed)
    raise DataError(
        f"unrecognized header {','.join(header)}; expected "
        f"{','.join(FREQUENCY)} or {','.join(CENSORED)}",
        line=1,
    )


def life_table_to_sample(rows) -> CensoredSample:
    """Rows ``(line, T, at_risk, events, indicator)`` to a :class:`CensoredSample`.

    The censored count at ``T_k`` is the at-risk decrement not explained by
    events; the last row's survivors are censored there. The result is
    checked to reproduce the at-risk column.
    """
    lines = [r[0] for r in rows]
    t = np.array([r[1] for r in rows])
    at_risk = np.array([r[2] for r in rows])
    d = np.array([r[3] for r in rows])
    flag = np.array([r[4] for r in rows])
    if np.any(np.diff(t) <= 0):
        bad = lines[int(np.flatnonzero(np.diff(t) <= 0)[0]) + 1]
        raise DataError("T must be strictly increasing", line=bad)
    nxt = np.append(at_risk[1:], 0)
    q = at_risk - d - nxt
    for k in range(t.size):
        if q[k] < 0:
            raise DataError("at-risk count drops by less than the events", line=lines[k])
        if q[k] > 0 and flag[k] == 0:
            raise DataError(f"{q[k]} unexplained withdrawals on a row without censoring", line=lines[k])
        if flag[k] not in (0, 1):
            raise DataError("censoring indicator must be 0 or 1", line=lines[k])
    keep = d + q > 0
    sample = CensoredSample(t[keep], d[keep], q[keep])
    rebuilt = np.array([int((sample.d + sample.q)[sample.x >= tk].sum()) for tk in t])
    if not np.array_equal(rebuilt, at_risk):
        raise DataError("censoring reconstruction does not reproduce the at-risk column")
    return sample


def ingest(source: str | Path):
    """Load an embedded dataset by key, or a CSV file by path."""
    key = str(source)
    if key in EMBEDDED:
        return read_csv_text(embedded_text(key))
    path = Path(source)
    if not path.is_file():
        raise DataError(f"no such dataset or file: {key!r}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not UTF-8 text: {exc}") from None
    return read_csv_text(text)
