"""Posterior summaries of the structure-averaging sampler."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from ..errors import OutOfAxis
from ..series import pearson_correlation_matrix

__all__ = [
    "ExtractedChangepoint",
    "PosteriorSummary",
    "classify_slope_sign",
    "extract_changepoints",
    "trend_correlation_matrix",
]


@dataclass(frozen=True)
class ExtractedChangepoint:
    """A local maximum of the knot occupancy that cleared the reporting bar."""

    date: dt.date
    index: int
    probability: float


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Everything the report layer needs about one decomposed series.

    Curve dicts carry "mean", "lower", "upper" (equal-tailed 95% band from
    a thinned sample buffer). slope_sign rows are (p_up, p_flat, p_down)
    and sum to one. cumulative_ncp_dist[k] is Pr(total knots >= k).
    trend_cp_prob[t] is the occupancy of index t itself, while
    trend_cp_window_prob[t] is Pr(some knot within half a min_seg of t),
    which is the right scale for deciding whether a break is there at all.
    """

    series_id: str
    dates: tuple[dt.date, ...]
    values: np.ndarray
    trend_cp_prob: np.ndarray
    trend_cp_window_prob: np.ndarray
    seasonal_cp_prob: np.ndarray
    ncp_trend_dist: np.ndarray
    ncp_seasonal_dist: np.ndarray
    cumulative_ncp_dist: np.ndarray
    slope_sign: np.ndarray
    fitted_trend: dict
    fitted_seasonal: dict
    mean_seasonal_order: np.ndarray
    extracted_cps: tuple[ExtractedChangepoint, ...]
    jumps: tuple[float, ...]
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.dates)

    def residual(self) -> np.ndarray:
        return self.values - self.fitted_trend["mean"] - self.fitted_seasonal["mean"]

    def median_ncp(self) -> int:
        """Posterior median of the trend knot count."""
        cdf = np.cumsum(self.ncp_trend_dist)
        return int(np.searchsorted(cdf, 0.5))


def _local_maxima(prob: np.ndarray) -> np.ndarray:
    """Indices with positive mass that dominate both neighbors (ties go left)."""
    left = np.r_[-np.inf, prob[:-1]]
    right = np.r_[prob[1:], -np.inf]
    return np.flatnonzero((prob > 0) & (prob > left) & (prob >= right))


def extract_changepoints(trend_cp_prob: np.ndarray, ncp_dist: np.ndarray,
                         jump_sum: np.ndarray, jump_cnt: np.ndarray,
                         dates: tuple[dt.date, ...], min_seg: int,
                         cp_prob_min: float) -> tuple[tuple[ExtractedChangepoint, ...],
                                                      tuple[float, ...]]:
    """Pick reportable knots from the occupancy curve.

    Greedy by probability among local maxima, enforcing min_seg separation
    (two peaks closer than that cannot be distinct knots), dropping peaks
    below cp_prob_min, and stopping at the posterior median count so the
    list length reflects how many knots the model actually believes in
    rather than how ragged the curve is.
    """
    cdf = np.cumsum(ncp_dist)
    cap = int(np.searchsorted(cdf, 0.5))
    if cap == 0:
        return (), ()
    cands = _local_maxima(trend_cp_prob)
    cands = cands[trend_cp_prob[cands] >= cp_prob_min]
    order = cands[np.argsort(-trend_cp_prob[cands], kind="stable")]
    chosen: list[int] = []
    for idx in order:
        if len(chosen) >= cap:
            break
        if all(abs(idx - c) >= min_seg for c in chosen):
            chosen.append(int(idx))
    chosen.sort()

    cps, jumps = [], []
    for idx in chosen:
        lo, hi = max(0, idx - 3), min(len(jump_sum), idx + 4)
        cnt = jump_cnt[lo:hi].sum()
        jumps.append(float(jump_sum[lo:hi].sum() / cnt) if cnt > 0 else 0.0)
        cps.append(ExtractedChangepoint(dates[idx], idx, float(trend_cp_prob[idx])))
    return tuple(cps), tuple(jumps)


def classify_slope_sign(summary: PosteriorSummary, t: int) -> tuple[float, float, float]:
    """(p_up, p_flat, p_down) of the trend slope at time index t."""
    if not 0 <= t < summary.n:
        raise OutOfAxis(f"index {t} outside [0, {summary.n})")
    row = summary.slope_sign[t]
    return float(row[0]), float(row[1]), float(row[2])


def trend_correlation_matrix(summaries) -> tuple[np.ndarray, list[str]]:
    """Correlation of posterior-mean trends across series on one shared axis."""
    summaries = list(summaries)
    if len(summaries) < 2:
        raise ValueError("need >= 2 summaries")
    axis = summaries[0].dates
    if any(s.dates != axis for s in summaries[1:]):
        raise ValueError("summaries must share one date axis")
    ids = [s.series_id for s in summaries]
    mat = pearson_correlation_matrix([s.fitted_trend["mean"] for s in summaries], ids)
    return mat, ids
