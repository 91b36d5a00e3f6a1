"""Small helpers shared across test modules."""

import datetime as dt

import numpy as np

from breakscope.series import TimeSeries

START = dt.date(2020, 1, 1)


def daily_axis(n: int, start: dt.date = START) -> list[dt.date]:
    return [start + dt.timedelta(days=i) for i in range(n)]


def series_from(values, sid: str = "s", start: dt.date = START,
                transform_tag: str = "raw") -> TimeSeries:
    values = np.asarray(values, dtype=float)
    return TimeSeries.from_arrays(sid, daily_axis(len(values), start), values,
                                  transform_tag)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(c) for c in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
