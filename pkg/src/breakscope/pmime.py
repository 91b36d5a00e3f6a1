"""Directed-coupling estimation from nonuniform mixed embeddings.

A mixed embedding is a small set of lagged variables, drawn from every
series in a panel, selected greedily for the conditional predictive
information they carry about one target's next value. The coupling
strength from a driver to a target is the share of the embedding's total
predictive information that the driver's lags carry exclusively. Uniform
fixed-lag variants (transfer entropy and its fully conditioned form) are
included for comparison and for low-dimensional panels.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionalityWarning, ShortWindowWarning, TooShort, WindowTooLong
from .infotheory import knn_cmi, knn_mi
from .series import Panel, TimeSeries

__all__ = [
    "LagVariable",
    "MixedEmbedding",
    "PmimeResult",
    "build_mixed_embedding",
    "transfer_entropy",
    "partial_transfer_entropy",
    "pmime",
    "rolling_pmime",
    "causality_network",
    "network_edge_rows",
]


@dataclass(frozen=True, order=True)
class LagVariable:
    """One lagged coordinate: series `series_index` observed `lag` steps back."""

    series_index: int
    lag: int

    def __post_init__(self):
        if self.series_index < 0:
            raise ValueError("series_index must be nonnegative")
        if self.lag < 0:
            raise ValueError("lag must be nonnegative")


@dataclass(frozen=True)
class MixedEmbedding:
    target_index: int
    selected: tuple[LagVariable, ...]
    cycle_gains: tuple[float, ...]  # accepted conditional-information gain per cycle
    rule: str = "surrogate"
    stop_reason: str = ""

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("duplicate lag variables in embedding")
        if len(self.cycle_gains) != len(self.selected):
            raise ValueError("one gain per selected variable required")


@dataclass(frozen=True, eq=False)
class PmimeResult:
    matrix: np.ndarray          # [i, j] = strength of i driving j, in [0, 1]
    adjacency: np.ndarray       # binary: matrix > 0
    clamped: np.ndarray         # True where the raw ratio left [0, 1]
    embeddings: tuple[MixedEmbedding, ...]
    ids: tuple[str, ...]
    diagnostics: dict           # (i, j) -> numerator / denominator / driver lags


def _check_length(n: int, l_max: int) -> None:
    if l_max < 1:
        raise ValueError("maximum lag must be >= 1")
    if n < 20 * l_max:
        raise TooShort(f"need >= {20 * l_max} aligned samples for lag depth {l_max}, got {n}")


def _lagged_columns(v: np.ndarray, l_max: int) -> dict[LagVariable, np.ndarray]:
    """Candidate columns aligned so row t predicts v[l_max + t]."""
    n = v.shape[0]
    out = {}
    for s in range(v.shape[1]):
        for lag in range(1, l_max + 1):
            out[LagVariable(s, lag)] = v[l_max - lag: n - lag, s]
    return out


def _max_stat_accept(cols, probe, future, z, best_gain, rng, n_rows, l_max,
                     k, seed, n_surrogates, reject_at, fast_accept_after) -> bool:
    """Time-shift significance test of one selection cycle.

    Each pass applies a single circular shift, drawn once per pass, to every
    candidate column and asks whether the best shifted gain reaches the
    observed one. The observed statistic is itself a maximum over candidates,
    so the null reference must be the per-pass maximum as well; testing the
    winning candidate against shifts of only itself ignores selection and
    accepts noise far more often than the nominal level.

    Counting stops as soon as the exceedance count settles the decision. A
    cycle with no exceedances after `fast_accept_after` passes is accepted
    early; under the null the maximum exceeds roughly every other pass, so
    the shortcut only fires for candidates far from the threshold.
    """
    lo, hi = l_max + 1, n_rows - l_max - 1
    exceed = 0
    for r in range(n_surrogates):
        delta = int(rng.integers(lo, hi + 1))
        hit = False
        for col in probe:
            if knn_cmi(np.roll(col, delta), future, z, k=k, seed=seed) >= best_gain:
                hit = True
                break
        if hit:
            exceed += 1
            if exceed >= reject_at:
                return False
        elif exceed == 0 and r + 1 >= fast_accept_after:
            return True
    return True


def _greedy_select(v, target, l_max, stop, k, n_surrogates, alpha,
                   ratio_threshold, seed):
    n_rows = v.shape[0] - l_max
    future = v[l_max:, target]
    cols = _lagged_columns(v, l_max)
    candidates = sorted(cols)
    rng = np.random.default_rng([seed, target])
    reject_at = max(1, int(np.floor(alpha * (n_surrogates + 1))))
    fast_accept_after = max(10, int(np.ceil(0.4 * n_surrogates)))

    selected: list[LagVariable] = []
    gains: list[float] = []
    w_cols: list[np.ndarray] = []
    reason = "exhausted"
    while len(selected) < len(candidates):
        chosen = set(selected)
        remaining = [c for c in candidates if c not in chosen]
        z = np.column_stack(w_cols) if w_cols else None
        obs = np.array([max(0.0, knn_cmi(cols[c], future, z, k=k, seed=seed))
                        for c in remaining])
        best_i = int(np.argmax(obs))
        best, best_gain = remaining[best_i], float(obs[best_i])
        if best_gain <= 0.0:
            reason = "no_positive_gain"
            break
        if stop == "surrogate":
            # probe strongest-first so rejecting passes exit early
            order = np.argsort(-obs, kind="stable")
            probe = [cols[remaining[i]] for i in order]
            ok = _max_stat_accept(cols, probe, future, z, best_gain, rng,
                                  n_rows, l_max, k, seed, n_surrogates,
                                  reject_at, fast_accept_after)
            if not ok:
                reason = "surrogate_reject"
                break
        elif stop == "ratio":
            prev = knn_mi(np.column_stack(w_cols), future, k=k, seed=seed)[0] if w_cols else 0.0
            grown = knn_mi(np.column_stack(w_cols + [cols[best]]), future, k=k, seed=seed)[0]
            if grown <= 0.0 or (w_cols and prev / grown > ratio_threshold):
                reason = "ratio_plateau"
                break
        else:
            raise ValueError(f"unknown stopping rule {stop!r}")
        selected.append(best)
        gains.append(best_gain)
        w_cols.append(cols[best])
    return selected, gains, reason


def build_mixed_embedding(panel: Panel, target: int, l_max: int = 5,
                          stop: str = "surrogate", k: int = 4,
                          n_surrogates: int = 100, alpha: float = 0.05,
                          ratio_threshold: float = 0.97, seed: int = 0) -> MixedEmbedding:
    """Greedily assemble the most predictive lag set for one target.

    Cycles add the candidate (series, lag) with the largest conditional
    information gain about the target's next value given what is already
    selected, until the stopping rule fires. `stop` is "surrogate" (per-cycle
    time-shift test at level `alpha` with `n_surrogates` passes) or "ratio"
    (stop when the previous embedding already carries more than
    `ratio_threshold` of the grown embedding's information). The embedding
    may legitimately come back empty.
    """
    v = panel.values_matrix()
    _check_length(v.shape[0], l_max)
    if not 0 <= target < v.shape[1]:
        raise IndexError(f"target {target} out of range for {v.shape[1]} series")
    sel, gains, reason = _greedy_select(v, target, l_max, stop, k, n_surrogates,
                                        alpha, ratio_threshold, seed)
    return MixedEmbedding(target, tuple(sel), tuple(gains), stop, reason)


def _uniform_block(v: np.ndarray, s: int, l: int) -> np.ndarray:
    n = v.shape[0]
    return np.column_stack([v[l - lag: n - lag, s] for lag in range(1, l + 1)])


def transfer_entropy(panel: Panel, source: int, target: int, l: int = 5,
                     k: int = 4, seed: int = 0) -> float:
    """Information the source's last `l` values add about the target's next
    value beyond the target's own last `l` values. Other panel series are
    ignored; see partial_transfer_entropy for the fully conditioned form."""
    v = panel.values_matrix()
    _check_length(v.shape[0], l)
    future = v[l:, target]
    return knn_cmi(_uniform_block(v, source, l), future,
                   _uniform_block(v, target, l), k=k, seed=seed)


def partial_transfer_entropy(panel: Panel, source: int, target: int, l: int = 5,
                             k: int = 4, seed: int = 0) -> float:
    """Transfer entropy additionally conditioned on every other series' past,
    so only direct source->target influence survives."""
    v = panel.values_matrix()
    n, n_series = v.shape
    _check_length(n, l)
    if n_series * l > n / 10:
        warnings.warn(
            f"conditioning dimension {n_series * l} is large for {n} samples; "
            "neighbor counts become unreliable", DimensionalityWarning)
    future = v[l:, target]
    cond = [_uniform_block(v, target, l)]
    cond += [_uniform_block(v, s, l) for s in range(n_series) if s not in (source, target)]
    return knn_cmi(_uniform_block(v, source, l), future, np.hstack(cond), k=k, seed=seed)


def pmime(panel: Panel, l_max: int = 5, stop: str = "surrogate", k: int = 4,
          n_surrogates: int = 100, alpha: float = 0.05,
          ratio_threshold: float = 0.97, seed: int = 0) -> PmimeResult:
    """All-pairs directed coupling matrix from per-target mixed embeddings.

    Entry (i, j) is 0 exactly when target j's embedding selected no lag of
    series i; otherwise it is the conditional information of series i's
    selected lags (given the rest of the embedding) normalized by the whole
    embedding's information, clamped into [0, 1] with the clamp recorded.
    """
    v = panel.values_matrix()
    n, n_series = v.shape
    _check_length(n, l_max)
    if n < 20 * l_max * n_series:
        warnings.warn(
            f"panel length {n} below the recommended {20 * l_max * n_series} "
            f"for {n_series} series at lag depth {l_max}", ShortWindowWarning)

    cols = _lagged_columns(v, l_max)
    matrix = np.zeros((n_series, n_series))
    clamped = np.zeros((n_series, n_series), dtype=bool)
    embeddings: list[MixedEmbedding] = []
    diagnostics: dict[tuple[int, int], dict] = {}
    for j in range(n_series):
        sel, gains, reason = _greedy_select(v, j, l_max, stop, k, n_surrogates,
                                            alpha, ratio_threshold, seed)
        embeddings.append(MixedEmbedding(j, tuple(sel), tuple(gains), stop, reason))
        future = v[l_max:, j]
        denom = 0.0
        if sel:
            w_block = np.column_stack([cols[c] for c in sel])
            denom = knn_mi(w_block, future, k=k, seed=seed)[0]
        for i in range(n_series):
            if i == j:
                continue
            driver = [c for c in sel if c.series_index == i]
            entry = {"numerator": 0.0, "denominator": float(denom),
                     "driver_lags": tuple(c.lag for c in driver)}
            if driver:
                rest = [c for c in sel if c.series_index != i]
                num = knn_cmi(np.column_stack([cols[c] for c in driver]), future,
                              np.column_stack([cols[c] for c in rest]) if rest else None,
                              k=k, seed=seed)
                entry["numerator"] = float(num)
                if denom <= 0.0:
                    matrix[i, j] = 0.0
                    clamped[i, j] = True
                else:
                    raw = num / denom
                    matrix[i, j] = min(1.0, max(0.0, raw))
                    clamped[i, j] = raw != matrix[i, j]
            diagnostics[(i, j)] = entry
    adjacency = (matrix > 0.0).astype(int)
    return PmimeResult(matrix, adjacency, clamped, tuple(embeddings),
                       tuple(panel.ids), diagnostics)


def rolling_pmime(panel: Panel, window_len: int, step: int | None = None,
                  **kwargs) -> list[tuple]:
    """Full-matrix coupling on sliding windows, stamped at each window end.

    Windows below 500 samples leave too few neighbors per conditioning cell;
    they run, but with a warning.
    """
    if step is None:
        step = window_len
    if window_len > panel.n:
        raise WindowTooLong(f"window {window_len} > panel length {panel.n}")
    if window_len < 500:
        warnings.warn(f"window of {window_len} samples is short for "
                      "neighbor-count coupling estimates", ShortWindowWarning)
    out = []
    for start in range(0, panel.n - window_len + 1, step):
        end = start + window_len
        axis = panel.date_axis[start:end]
        sliced = tuple(
            TimeSeries(s.id, s.points[start:end], s.transform_tag, dict(s.meta))
            for s in panel.series)
        out.append((panel.date_axis[end - 1],
                    pmime(Panel(sliced, axis, dict(panel.meta)), **kwargs)))
    return out


def causality_network(result: PmimeResult, threshold: float = 0.0) -> dict:
    """Node-link export of the coupling matrix; edges where value > threshold."""
    nodes = [{"id": sid} for sid in result.ids]
    links = []
    for i, src in enumerate(result.ids):
        for j, dst in enumerate(result.ids):
            w = float(result.matrix[i, j])
            if i != j and w > threshold:
                links.append({"source": src, "target": dst, "weight": w})
    return {"directed": True, "multigraph": False, "nodes": nodes, "links": links}


def network_edge_rows(result: PmimeResult, threshold: float = 0.0) -> list[tuple[str, str, float]]:
    """(source, target, weight) rows for tabular export, same edge set as
    causality_network."""
    net = causality_network(result, threshold)
    return [(e["source"], e["target"], e["weight"]) for e in net["links"]]
