"""Data model, CSV ingestion, preprocessing and rolling-window machinery.

Series are daily observations treated as evenly spaced in observation index:
rolling windows count observations, not calendar days. Panels align member
series by inner join on dates.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .errors import (
    AllDropped,
    DuplicateDate,
    MalformedRow,
    MissingFile,
    NonPositiveValue,
    NoOverlap,
    TooShort,
    WindowTooLong,
    ZeroVariance,
)

TRANSFORM_TAGS = ("raw", "log", "log_return", "signed_log_return")


@dataclass(frozen=True)
class TimePoint:
    date: dt.date
    value: float


@dataclass(frozen=True)
class TimeSeries:
    """An id-labelled, strictly date-ordered sequence of finite values."""

    id: str
    points: tuple[TimePoint, ...]
    transform_tag: str = "raw"
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.transform_tag not in TRANSFORM_TAGS:
            raise ValueError(f"unknown transform_tag {self.transform_tag!r}")
        if self.transform_tag != "raw" and len(self.points) < 2:
            raise TooShort(f"{self.id}: non-raw series needs >= 2 points")
        prev = None
        for p in self.points:
            if not math.isfinite(p.value):
                raise ValueError(f"{self.id}: non-finite value at {p.date}")
            if prev is not None and p.date <= prev:
                raise DuplicateDate(f"{self.id}: dates not strictly increasing at {p.date}")
            prev = p.date

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return tuple(p.date for p in self.points)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points], dtype=float)

    @classmethod
    def from_arrays(cls, sid: str, dates: Sequence[dt.date], values: Sequence[float],
                    transform_tag: str = "raw", meta: dict | None = None) -> "TimeSeries":
        pts = tuple(TimePoint(d, float(v)) for d, v in zip(dates, values))
        return cls(sid, pts, transform_tag, meta or {})


@dataclass(frozen=True)
class Panel:
    """Series sharing one date axis; alignment enforced at construction."""

    series: tuple[TimeSeries, ...]
    date_axis: tuple[dt.date, ...]
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for s in self.series:
            if s.dates != self.date_axis:
                raise ValueError(f"series {s.id!r} is not aligned to the panel axis")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.series)

    @property
    def n(self) -> int:
        return len(self.date_axis)

    def values_matrix(self) -> np.ndarray:
        """(n, K) value matrix, one column per series."""
        return np.column_stack([s.values for s in self.series])

    def column(self, sid: str) -> TimeSeries:
        for s in self.series:
            if s.id == sid:
                return s
        raise KeyError(sid)

    @classmethod
    def align(cls, series: Iterable[TimeSeries], meta: dict | None = None) -> "Panel":
        """Inner join on dates: keep only dates present in every series."""
        series = tuple(series)
        if not series:
            raise ValueError("cannot build a Panel from zero series")
        common = set(series[0].dates)
        for s in series[1:]:
            common &= set(s.dates)
        if not common:
            raise NoOverlap("series share no common dates")
        axis = tuple(sorted(common))
        keep = []
        for s in series:
            idx = {p.date: p.value for p in s.points}
            keep.append(TimeSeries.from_arrays(s.id, axis, [idx[d] for d in axis],
                                               s.transform_tag, dict(s.meta)))
        return cls(tuple(keep), axis, meta or {})


@dataclass(frozen=True)
class RollingWindowSpec:
    window_len: int
    step: int = 1
    label_at: str = "window_end"

    def __post_init__(self):
        if self.window_len < 1 or self.step < 1:
            raise ValueError("window_len and step must be positive")
        if self.label_at != "window_end":
            raise ValueError("only window_end labelling is supported")

    def n_windows(self, n: int) -> int:
        return (n - self.window_len) // self.step + 1


@dataclass(frozen=True)
class RollingSeries:
    source_id: str
    statistic: str
    points: tuple[tuple[dt.date, float], ...]
    spec: RollingWindowSpec
    gaps: tuple[tuple[dt.date, str], ...] = ()

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return tuple(d for d, _ in self.points)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.points], dtype=float)


def load_csv(path: str | os.PathLike, schema: dict[str, str] | None = None) -> Panel:
    """Read a date-indexed CSV into a Panel.

    The first column must hold ISO-8601 dates; remaining columns are decimal
    values. `schema` optionally maps CSV column names to series ids and
    restricts which columns are loaded; by default every non-date column is
    loaded under its own header name. Any unparseable cell aborts the load
    with the offending line number.
    """
    if not os.path.exists(path):
        raise MissingFile(str(path))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file") from None
        if len(header) < 2:
            raise MalformedRow(1, "need a date column plus at least one value column")
        columns = header[1:]
        if schema is None:
            schema = {c: c for c in columns}
        unknown = set(schema) - set(columns)
        if unknown:
            raise MalformedRow(1, f"schema names absent from header: {sorted(unknown)}")
        sel = [(i + 1, schema[c]) for i, c in enumerate(columns) if c in schema]

        dates: list[dt.date] = []
        rows: list[list[float]] = []
        seen: set[dt.date] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise MalformedRow(lineno, f"expected {len(header)} cells, got {len(row)}")
            try:
                d = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise MalformedRow(lineno, f"bad date {row[0]!r}") from None
            if d in seen:
                raise DuplicateDate(f"date {d} repeated at line {lineno}")
            seen.add(d)
            vals = []
            for idx, _ in sel:
                try:
                    v = float(row[idx])
                except ValueError:
                    raise MalformedRow(lineno, f"bad decimal {row[idx]!r}") from None
                if not math.isfinite(v):
                    raise MalformedRow(lineno, f"non-finite value {row[idx]!r}")
                vals.append(v)
            dates.append(d)
            rows.append(vals)
    if not dates:
        raise MalformedRow(2, "no data rows")
    order = np.argsort(np.array([d.toordinal() for d in dates]))
    dates = [dates[i] for i in order]
    table = np.array(rows, dtype=float)[order]
    series = tuple(
        TimeSeries.from_arrays(sid, dates, table[:, j])
        for j, (_, sid) in enumerate(sel)
    )
    return Panel(series, tuple(dates))


def drop_negative_prices(s: TimeSeries) -> TimeSeries:
    """Remove points with value <= 0; the removal count lands in `meta`."""
    if s.transform_tag != "raw":
        raise ValueError("drop_negative_prices applies to raw price series")
    kept = tuple(p for p in s.points if p.value > 0)
    dropped = len(s.points) - len(kept)
    if not kept:
        raise AllDropped(f"{s.id}: no positive values remain")
    meta = dict(s.meta)
    meta["n_dropped_nonpositive"] = dropped
    return TimeSeries(s.id, kept, s.transform_tag, meta)


def log_returns(s: TimeSeries) -> TimeSeries:
    """r_i = ln(v_i) - ln(v_{i-1}), stamped at date i."""
    vals = s.values
    if len(vals) < 2:
        raise TooShort(f"{s.id}: need >= 2 points for returns")
    if np.any(vals <= 0):
        raise NonPositiveValue(f"{s.id}: non-positive value; run drop_negative_prices first")
    r = np.diff(np.log(vals))
    return TimeSeries.from_arrays(s.id, s.dates[1:], r, "log_return", dict(s.meta))


def log_transform(s: TimeSeries) -> TimeSeries:
    vals = s.values
    if np.any(vals <= 0):
        raise NonPositiveValue(f"{s.id}: non-positive value; cannot take logs")
    return TimeSeries.from_arrays(s.id, s.dates, np.log(vals), "log", dict(s.meta))


def jarque_bera(x) -> tuple[float, float]:
    """JB = n/6 * (S^2 + (K-3)^2/4); p-value from the chi-square(2) upper tail."""
    vals = np.asarray(getattr(x, "values", x), dtype=float)
    n = len(vals)
    if n < 20:
        raise TooShort(f"jarque_bera needs >= 20 observations, got {n}")
    c = vals - vals.mean()
    m2 = np.mean(c ** 2)
    if m2 == 0:
        raise ZeroVariance(getattr(x, "id", "<array>"))
    skew = np.mean(c ** 3) / m2 ** 1.5
    kurt = np.mean(c ** 4) / m2 ** 2
    jb = n / 6.0 * (skew ** 2 + (kurt - 3.0) ** 2 / 4.0)
    return float(jb), float(sps.chi2.sf(jb, 2))


def rolling_apply(s: TimeSeries, spec: RollingWindowSpec,
                  f: Callable[[np.ndarray], float], statistic: str = "stat") -> RollingSeries:
    """Apply f to each contiguous window, stamping output at the window end.

    Windows where f raises produce a gap entry instead of a point.
    """
    n = len(s)
    if spec.window_len > n:
        raise WindowTooLong(f"window {spec.window_len} > series length {n}")
    vals = s.values
    dates = s.dates
    pts: list[tuple[dt.date, float]] = []
    gaps: list[tuple[dt.date, str]] = []
    for start in range(0, n - spec.window_len + 1, spec.step):
        end = start + spec.window_len
        stamp = dates[end - 1]
        try:
            pts.append((stamp, float(f(vals[start:end]))))
        except Exception as exc:  # recorded, not raised: one bad window is a gap
            gaps.append((stamp, f"{type(exc).__name__}: {exc}"))
    return RollingSeries(s.id, statistic, tuple(pts), spec, tuple(gaps))


def pearson_correlation_matrix(rows: Sequence[Sequence[float]],
                               ids: Sequence[str] | None = None) -> np.ndarray:
    """Correlation matrix of equal-length sequences; exact 1s on the diagonal."""
    mats = [np.asarray(r, dtype=float) for r in rows]
    if len(mats) < 2:
        raise ValueError("need >= 2 sequences")
    length = len(mats[0])
    if length < 3 or any(len(m) != length for m in mats):
        raise ValueError("sequences must share one length >= 3")
    if ids is None:
        ids = [str(i) for i in range(len(mats))]
    for sid, m in zip(ids, mats):
        if np.std(m) == 0:
            raise ZeroVariance(sid)
    c = np.corrcoef(np.vstack(mats))
    c = np.clip((c + c.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(c, 1.0)
    return c
