"""Entropy and mutual information: discrete plug-in, binned, and k-NN.

All quantities are in nats. The continuous estimator is the first Kraskov
variant: max-norm neighborhoods in the joint space, marginal counts strictly
inside the k-th neighbor distance. Marginal counting uses a sorted-array scan
for one-dimensional blocks and a chebyshev KD-tree otherwise.

Ties are broken by an infinitesimal jitter derived deterministically from the
column bytes and the caller's seed, so estimates are reproducible and exactly
symmetric under argument swaps.
"""
from __future__ import annotations

import datetime as dt
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma
from sklearn.neighbors import KDTree as _SkKDTree

from .errors import (
    DegenerateDimension,
    EmptyTable,
    NoOverlap,
    NotNormalized,
    TooShort,
    WindowTooLong,
)
from .series import RollingSeries, RollingWindowSpec, TimeSeries


@dataclass(frozen=True)
class DiscreteJoint:
    """A two-dimensional contingency table of nonnegative counts."""

    counts: np.ndarray
    n: int

    @classmethod
    def from_counts(cls, counts) -> "DiscreteJoint":
        c = np.asarray(counts, dtype=float)
        if c.ndim != 2 or c.size == 0:
            raise EmptyTable("counts must be a non-empty 2-D table")
        if np.any(c < 0):
            raise EmptyTable("counts must be nonnegative")
        total = c.sum()
        if total <= 0:
            raise EmptyTable("table sums to zero")
        return cls(c, int(round(total)))

    def joint_p(self) -> np.ndarray:
        return self.counts / self.counts.sum()


@dataclass(frozen=True)
class MIEstimate:
    value: float
    estimator: str  # "binned" or "knn"
    params: dict = field(default_factory=dict)
    flagged_negative: bool = False
    degenerate: bool = False
    units: str = "nats"


def entropy(p) -> float:
    """-sum p ln p with 0 ln 0 = 0; input must be a normalized distribution."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise NotNormalized(f"probabilities must be >= 0 and sum to 1, sum={p.sum()!r}")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def joint_entropy(j: DiscreteJoint) -> float:
    return entropy(j.joint_p().ravel())


def conditional_entropy(j: DiscreteJoint) -> float:
    """H(X|Y) = -sum_{x,y} p(x,y) ln p(x|y), rows indexing X."""
    p = j.joint_p()
    py = p.sum(axis=0)
    out = 0.0
    for ix in range(p.shape[0]):
        for iy in range(p.shape[1]):
            if p[ix, iy] > 0:
                out -= p[ix, iy] * np.log(p[ix, iy] / py[iy])
    return float(out)


def mutual_information_discrete(j: DiscreteJoint) -> MIEstimate:
    """Plug-in MI: sum p(x,y) ln(p(x,y) / (p(x)p(y))), never negative."""
    p = j.joint_p()
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0
    val = float(np.sum(p[mask] * np.log(p[mask] / (px @ py)[mask])))
    return MIEstimate(max(val, 0.0), "binned", {"cells": p.shape})


# --- k-NN machinery ----------------------------------------------------------

def _as_block(x) -> np.ndarray:
    a = np.asarray(getattr(x, "values", x), dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _jitter_block(block: np.ndarray, seed: int) -> np.ndarray:
    """Content-keyed infinitesimal noise: identical columns get identical
    jitter regardless of argument position, so swaps stay exactly symmetric."""
    out = np.empty_like(block)
    for c in range(block.shape[1]):
        col = np.ascontiguousarray(block[:, c])
        scale = col.std()
        if scale == 0:
            raise DegenerateDimension("constant input column")
        key = zlib.crc32(col.tobytes()) ^ (seed & 0xFFFFFFFF)
        rng = np.random.default_rng(key)
        out[:, c] = col + 1e-10 * scale * rng.standard_normal(len(col))
    return out


def _count_1d(col: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Exact per-point interval counts on a sorted copy of `col`.

    Plain searchsorted on col +- radii miscounts boundary points: the bound
    subtraction rounds differently from the |xj - xi| the tree computed, so
    the kth joint neighbor can be re-admitted. Nudge each bound by ulps until
    it agrees with the distance comparison, then the bisection is exact.
    """
    srt = np.sort(col)
    lo_b = col - radii
    for _ in range(3):
        ok = (col - lo_b) <= radii
        down = np.nextafter(lo_b, -np.inf)
        down_ok = (col - down) <= radii
        lo_b = np.where(ok & down_ok, down, np.where(~ok, np.nextafter(lo_b, np.inf), lo_b))
    hi_b = col + radii
    for _ in range(3):
        ok = (hi_b - col) <= radii
        up = np.nextafter(hi_b, np.inf)
        up_ok = (up - col) <= radii
        hi_b = np.where(ok & up_ok, up, np.where(~ok, np.nextafter(hi_b, -np.inf), hi_b))
    lo = np.searchsorted(srt, lo_b, side="left")
    hi = np.searchsorted(srt, hi_b, side="right")
    return hi - lo - 1


def _marginal_counts(block: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Points within `radii` of each row in max-norm, excluding the row itself."""
    if block.shape[1] == 1:
        return _count_1d(block[:, 0], radii)
    tree = _SkKDTree(block, metric="chebyshev")
    return tree.query_radius(block, radii, count_only=True) - 1


def _kth_radii(joint: np.ndarray, k: int) -> np.ndarray:
    tree = cKDTree(joint, balanced_tree=False, compact_nodes=False)
    dist = tree.query(joint, k=k + 1, p=np.inf)[0][:, -1]
    # shrink by one ulp so "<= r" counting below realizes the strict "< eps"
    return np.nextafter(dist, 0)


def knn_mi(x, y, k: int = 4, seed: int = 0) -> tuple[float, dict]:
    """KSG estimate of I(X;Y) for (possibly multi-column) blocks.

    Returns the value and a diagnostics dict with the mean marginal counts
    (used to flag functionally dependent, near-degenerate geometry).
    """
    xb = _jitter_block(_as_block(x), seed)
    yb = _jitter_block(_as_block(y), seed)
    n = len(xb)
    if len(yb) != n:
        raise ValueError("x and y must share length")
    r = _kth_radii(np.hstack([xb, yb]), k)
    nx = _marginal_counts(xb, r)
    ny = _marginal_counts(yb, r)
    val = float(digamma(k) + digamma(n) - np.mean(digamma(nx + 1) + digamma(ny + 1)))
    return val, {"mean_nx": float(nx.mean()), "mean_ny": float(ny.mean())}


def knn_cmi(x, y, z, k: int = 4, seed: int = 0) -> float:
    """KSG-style conditional MI I(X;Y|Z); with Z empty this is plain KSG MI."""
    zb = None if z is None else _as_block(z)
    if zb is None or zb.shape[1] == 0:
        return knn_mi(x, y, k, seed)[0]
    xb = _jitter_block(_as_block(x), seed)
    yb = _jitter_block(_as_block(y), seed)
    zb = _jitter_block(zb, seed)
    r = _kth_radii(np.hstack([xb, yb, zb]), k)
    nxz = _marginal_counts(np.hstack([xb, zb]), r)
    nyz = _marginal_counts(np.hstack([yb, zb]), r)
    nz = _marginal_counts(zb, r)
    return float(digamma(k) - np.mean(digamma(nxz + 1) + digamma(nyz + 1) - digamma(nz + 1)))


def mi_knn(x, y, k: int = 4, seed: int = 0) -> MIEstimate:
    """Kraskov MI between two scalar series (KSG first variant, max-norm)."""
    xa, ya = _as_block(x), _as_block(y)
    n = len(xa)
    if n < 50:
        raise TooShort(f"mi_knn needs >= 50 samples, got {n}")
    if not 1 <= k < n / 2:
        raise ValueError(f"k must satisfy 1 <= k < n/2, got {k}")
    val, diag = knn_mi(xa, ya, k, seed)
    degenerate = diag["mean_nx"] < k + 2 or diag["mean_ny"] < k + 2
    return MIEstimate(val, "knn", {"k": k, "seed": seed},
                      flagged_negative=val < 0, degenerate=degenerate)


def default_bins(n: int) -> int:
    return max(2, int(np.sqrt(n / 5)))


def binned_mi(x, y, bins: int | None = None) -> MIEstimate:
    """Plug-in MI on an equiprobable-marginal-bin contingency table."""
    xa = _as_block(x)[:, 0]
    ya = _as_block(y)[:, 0]
    n = len(xa)
    if len(ya) != n:
        raise ValueError("x and y must share length")
    if n < 20:
        raise TooShort(f"binned_mi needs >= 20 samples, got {n}")
    if bins is None:
        bins = default_bins(n)

    def assign(a: np.ndarray) -> np.ndarray:
        if a.max() == a.min():
            raise DegenerateDimension("all samples identical; cannot bin")
        edges = np.unique(np.quantile(a, np.linspace(0, 1, bins + 1)[1:-1]))
        return np.searchsorted(edges, a, side="right")

    bx, by = assign(xa), assign(ya)
    counts = np.zeros((bx.max() + 1, by.max() + 1))
    np.add.at(counts, (bx, by), 1)
    est = mutual_information_discrete(DiscreteJoint.from_counts(counts))
    return MIEstimate(est.value, "binned", {"bins": bins})


def rolling_mi(a: TimeSeries, b: TimeSeries, spec: RollingWindowSpec | None = None,
               estimator: str = "knn", k: int = 4, bins: int | None = None,
               seed: int = 0) -> RollingSeries:
    """Windowed MI between two series after inner-join alignment.

    Stamped at window end; windows where estimation fails become gaps.
    """
    if spec is None:
        spec = RollingWindowSpec(60, 1)
    common = sorted(set(a.dates) & set(b.dates))
    if not common:
        raise NoOverlap(f"{a.id} and {b.id} share no dates")
    if spec.window_len > len(common):
        raise WindowTooLong(f"window {spec.window_len} > overlap {len(common)}")
    amap = {p.date: p.value for p in a.points}
    bmap = {p.date: p.value for p in b.points}
    av = np.array([amap[d] for d in common])
    bv = np.array([bmap[d] for d in common])
    pts, gaps = [], []
    for start in range(0, len(common) - spec.window_len + 1, spec.step):
        end = start + spec.window_len
        stamp = common[end - 1]
        try:
            if estimator == "knn":
                est = mi_knn(av[start:end], bv[start:end], k=k, seed=seed)
            elif estimator == "binned":
                est = binned_mi(av[start:end], bv[start:end], bins=bins)
            else:
                raise ValueError(f"unknown estimator {estimator!r}")
            pts.append((stamp, est.value))
        except ValueError:
            raise
        except Exception as exc:
            gaps.append((stamp, f"{type(exc).__name__}: {exc}"))
    return RollingSeries(f"{a.id}~{b.id}", f"mi_{estimator}", tuple(pts), spec, tuple(gaps))


@dataclass(frozen=True)
class DecouplingEvent:
    onset: dt.date
    peak_date: dt.date
    peak_gap: float


def mi_decoupling(curve_a: RollingSeries, curve_b: RollingSeries,
                  gap_threshold: float = 0.1, run_len: int = 5) -> list[DecouplingEvent]:
    """Detect sustained separations between two rolling-MI curves.

    An event is a maximal run of at least `run_len` dates with
    |curve_a - curve_b| > gap_threshold that follows a run of at least
    `run_len` dates at or below the threshold.
    """
    adates = dict(curve_a.points)
    bdates = dict(curve_b.points)
    common = sorted(set(adates) & set(bdates))
    if not common:
        raise NoOverlap("curves share no dates")
    gap = np.array([abs(adates[d] - bdates[d]) for d in common])
    above = gap > gap_threshold

    events: list[DecouplingEvent] = []
    runs: list[tuple[bool, int, int]] = []  # (state, start, end-exclusive)
    start = 0
    for i in range(1, len(above) + 1):
        if i == len(above) or above[i] != above[start]:
            runs.append((bool(above[start]), start, i))
            start = i
    for idx, (state, lo, hi) in enumerate(runs):
        if not state or hi - lo < run_len:
            continue
        if idx == 0:
            continue  # series began decoupled; no preceding coupled run
        prev_state, plo, phi = runs[idx - 1]
        if prev_state or phi - plo < run_len:
            continue
        peak_off = lo + int(np.argmax(gap[lo:hi]))
        events.append(DecouplingEvent(common[lo], common[peak_off], float(gap[peak_off])))
    return events
