"""Machine-readable outputs: JSON documents and CSV tables.

Everything numeric is emitted as locale-independent decimal text with nine
significant digits. Writers are deterministic: fixed key order, fixed "\n"
line endings, and no clocks, so a seeded run serializes byte-identically.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
import os
import re

import numpy as np

from .errors import PartialFailure
from .events import BreakpointReport, EventCatalog, catalog_rows
from .series import RollingSeries

SCHEMA_VERSION = "1.0"
REPORT_SECTIONS = ("hurst", "mi", "pmime", "beast", "events")

__all__ = [
    "SCHEMA_VERSION",
    "REPORT_SECTIONS",
    "fmt9",
    "jsonable",
    "write_json",
    "write_csv",
    "safe_name",
    "panel_rows",
    "rolling_rows",
    "matrix_rows",
    "rolling_to_dict",
    "pmime_to_dict",
    "summary_to_dict",
    "beast_curve_table",
    "beast_ncp_table",
    "changepoint_rows",
    "breakpoint_rows",
    "breakpoint_report_to_dict",
    "assemble_report",
]


def fmt9(x) -> str:
    """One CSV cell: 9-significant-digit decimal text for floats."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            return ""
        return f"{float(x):.9g}"
    if isinstance(x, dt.date):
        return x.isoformat()
    return str(x)


def _round9(x: float):
    if not math.isfinite(x):
        return None
    return float(f"{x:.9g}")


def jsonable(obj):
    """Recursively reduce to JSON types, rounding floats to 9 significant digits."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round9(float(obj))
    if isinstance(obj, dt.date):
        return obj.isoformat()
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: str | os.PathLike, doc) -> None:
    text = json.dumps(jsonable(doc), sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def write_csv(path: str | os.PathLike, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt9(c) for c in row])


_NAME_RE = re.compile(r"[^A-Za-z0-9._-]+")


def safe_name(sid: str) -> str:
    """Series id as a filename fragment (ids like USD/RUB contain separators)."""
    cleaned = _NAME_RE.sub("_", sid).strip("._")
    return cleaned or "series"


# --- tabular serializers -----------------------------------------------------

def panel_rows(panel) -> tuple[list[str], list[list]]:
    header = ["date"] + list(panel.ids)
    mat = panel.values_matrix()
    rows = [[d] + [mat[i, j] for j in range(mat.shape[1])]
            for i, d in enumerate(panel.date_axis)]
    return header, rows


def rolling_rows(rs: RollingSeries, source: str | None = None) -> list[list]:
    """Long-format rows (date, statistic, value), optionally id-prefixed."""
    sid = source if source is not None else rs.source_id
    return [[sid, d, rs.statistic, v] for d, v in rs.points]


def matrix_rows(matrix, row_ids, col_ids=None) -> list[list]:
    col_ids = row_ids if col_ids is None else col_ids
    m = np.asarray(matrix)
    return [[row_ids[i], col_ids[j], m[i, j]]
            for i in range(m.shape[0]) for j in range(m.shape[1])]


def rolling_to_dict(rs: RollingSeries) -> dict:
    return {
        "source_id": rs.source_id,
        "statistic": rs.statistic,
        "window_len": rs.spec.window_len,
        "step": rs.spec.step,
        "points": [[d, v] for d, v in rs.points],
        "gaps": [[d, reason] for d, reason in rs.gaps],
    }


def pmime_to_dict(result) -> dict:
    embeddings = []
    for emb in result.embeddings:
        embeddings.append({
            "target": result.ids[emb.target_index],
            "selected": [{"series": result.ids[lv.series_index], "lag": lv.lag}
                         for lv in emb.selected],
            "cycle_gains": list(emb.cycle_gains),
            "stop_reason": emb.stop_reason,
        })
    diagnostics = {
        f"{result.ids[i]}->{result.ids[j]}": d
        for (i, j), d in sorted(result.diagnostics.items())
    }
    return {
        "ids": list(result.ids),
        "matrix": result.matrix,
        "adjacency": result.adjacency,
        "clamped": result.clamped,
        "embeddings": embeddings,
        "diagnostics": diagnostics,
    }


def summary_to_dict(s) -> dict:
    return {
        "series_id": s.series_id,
        "n": s.n,
        "dates": list(s.dates),
        "trend_cp_prob": s.trend_cp_prob,
        "trend_cp_window_prob": s.trend_cp_window_prob,
        "seasonal_cp_prob": s.seasonal_cp_prob,
        "ncp_trend_dist": s.ncp_trend_dist,
        "ncp_seasonal_dist": s.ncp_seasonal_dist,
        "cumulative_ncp_dist": s.cumulative_ncp_dist,
        "median_ncp": s.median_ncp(),
        "fitted_trend": s.fitted_trend,
        "fitted_seasonal": s.fitted_seasonal,
        "mean_seasonal_order": s.mean_seasonal_order,
        "slope_sign": s.slope_sign,
        "extracted_cps": [
            {"date": cp.date, "index": cp.index, "probability": cp.probability,
             "jump": jump}
            for cp, jump in zip(s.extracted_cps, s.jumps)
        ],
        "diagnostics": s.diagnostics,
    }


BEAST_CURVE_COLUMNS = [
    "date", "raw",
    "seasonal_mean", "seasonal_lower", "seasonal_upper", "seasonal_cp_prob",
    "seasonal_order_mean",
    "trend_mean", "trend_lower", "trend_upper", "trend_cp_prob",
    "slope_p_pos", "slope_p_zero", "slope_p_neg", "residual",
]


def beast_curve_table(s) -> tuple[list[str], list[list]]:
    """Per-time decomposition table, one column per diagnostic curve."""
    resid = s.residual()
    rows = []
    for i, d in enumerate(s.dates):
        rows.append([
            d, s.values[i],
            s.fitted_seasonal["mean"][i], s.fitted_seasonal["lower"][i],
            s.fitted_seasonal["upper"][i], s.seasonal_cp_prob[i],
            s.mean_seasonal_order[i],
            s.fitted_trend["mean"][i], s.fitted_trend["lower"][i],
            s.fitted_trend["upper"][i], s.trend_cp_prob[i],
            s.slope_sign[i, 0], s.slope_sign[i, 1], s.slope_sign[i, 2],
            resid[i],
        ])
    return BEAST_CURVE_COLUMNS, rows


def beast_ncp_table(s) -> tuple[list[str], list[list]]:
    header = ["k", "p_trend", "p_seasonal", "p_total_ge_k"]
    k_max = len(s.cumulative_ncp_dist)
    rows = []
    for k in range(k_max):
        rows.append([
            k,
            s.ncp_trend_dist[k] if k < len(s.ncp_trend_dist) else 0.0,
            s.ncp_seasonal_dist[k] if k < len(s.ncp_seasonal_dist) else 0.0,
            s.cumulative_ncp_dist[k],
        ])
    return header, rows


def changepoint_rows(summaries) -> list[list]:
    rows = []
    for s in summaries:
        for cp, jump in zip(s.extracted_cps, s.jumps):
            rows.append([s.series_id, cp.date, cp.index, cp.probability, jump])
    return rows


def breakpoint_rows(report: BreakpointReport, catalog: EventCatalog) -> list[list]:
    rows = []
    for market in sorted(report.markets):
        for r in report.markets[market]:
            edate = catalog.by_symbol(r.event).date if r.event else None
            rows.append([market, r.date, r.probability, r.event or "",
                         edate, r.relation, r.offset_days])
    return rows


def breakpoint_report_to_dict(report: BreakpointReport,
                              catalog: EventCatalog) -> dict:
    markets = {}
    for market, rs in report.markets.items():
        markets[market] = [
            {"date": r.date, "probability": r.probability, "event": r.event,
             "event_date": catalog.by_symbol(r.event).date if r.event else None,
             "relation": r.relation, "offset_days": r.offset_days}
            for r in rs
        ]
    return {
        "tol_days": report.tol_days,
        "max_match_days": report.max_match_days,
        "catalog": catalog_rows(catalog),
        "markets": markets,
    }


# --- report assembly ---------------------------------------------------------

def assemble_report(sections: dict, out_dir: str | os.PathLike,
                    csv_tables: dict | None = None,
                    errors: dict | None = None) -> dict:
    """Write report.json plus the section CSV bundle; return the document.

    `sections` maps section name to its JSON-ready payload (None or absent
    means the section did not run). `csv_tables` maps a file name to
    (header, rows, description); every table written is listed, with its
    description, in the document's manifest. With no populated section the
    report is vacuous: PartialFailure carries the missing names.
    """
    present = {k: v for k, v in sections.items()
               if k in REPORT_SECTIONS and v is not None}
    missing = [k for k in REPORT_SECTIONS if k not in present]
    if not present:
        raise PartialFailure(missing)

    os.makedirs(out_dir, exist_ok=True)
    manifest = []
    for fname in sorted(csv_tables or {}):
        header, rows, description = csv_tables[fname]
        write_csv(os.path.join(out_dir, fname), header, rows)
        manifest.append({"file": fname, "contents": description})

    doc = {
        "schema_version": SCHEMA_VERSION,
        "sections": present,
        "missing_sections": missing,
        "section_errors": errors or {},
        "manifest": manifest,
    }
    write_json(os.path.join(out_dir, "report.json"), doc)
    return doc
