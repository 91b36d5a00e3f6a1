"""Seeded synthetic generators and independent oracles used by the test suite.

Everything here is deterministic under its seed. The fGn generator is exact
(circulant spectral synthesis with a Cholesky fallback), because it serves as
the ground-truth oracle for the Hurst estimators.
"""
from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import EmbeddingFailure, OutOfRange, Unstable
from .series import Panel, TimeSeries

_EPOCH = dt.date(2000, 1, 1)


def _axis(n: int) -> list[dt.date]:
    return [_EPOCH + dt.timedelta(days=i) for i in range(n)]


def fgn_autocovariance(h: float, lags: np.ndarray) -> np.ndarray:
    """gamma(k) = 0.5*(|k+1|^2H - 2|k|^2H + |k-1|^2H) for unit-variance fGn."""
    k = np.abs(lags).astype(float)
    return 0.5 * (np.abs(k + 1) ** (2 * h) - 2 * k ** (2 * h) + np.abs(k - 1) ** (2 * h))


def gen_fgn(h: float, n: int, seed: int) -> np.ndarray:
    """Fractional Gaussian noise with Hurst h, unit variance, length n.

    Uses circulant embedding of the exact autocovariance; if the embedding
    spectrum comes out negative (pathological h close to 1 with tiny n), falls
    back to an exact O(n^2) Cholesky factorization of the covariance matrix.
    """
    if not 0 < h < 1:
        raise OutOfRange(f"h must lie in (0,1), got {h}")
    if n < 2:
        raise OutOfRange("n must be >= 2")
    rng = np.random.default_rng(seed)
    gamma = fgn_autocovariance(h, np.arange(n))
    row = np.concatenate([gamma, [0.0], gamma[-1:0:-1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-8 * eig.max():
        warnings.warn("circulant embedding not nonnegative; using Cholesky fallback",
                      RuntimeWarning, stacklevel=2)
        return _gen_fgn_cholesky(gamma, rng)
    eig = np.clip(eig, 0.0, None)
    m = 2 * n
    v = rng.standard_normal(m)
    w = np.empty(m, dtype=complex)
    w[0] = np.sqrt(eig[0] / m) * v[0]
    w[n] = np.sqrt(eig[n] / m) * v[n]
    half = np.sqrt(eig[1:n] / (2 * m))
    w[1:n] = half * (v[1:n] + 1j * v[n + 1:])
    w[n + 1:] = np.conj(w[n - 1:0:-1])
    return np.fft.fft(w).real[:n]


def _gen_fgn_cholesky(gamma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cov = toeplitz(gamma)
    jitter = 0.0
    for _ in range(4):
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(len(cov)))
            return chol @ rng.standard_normal(len(cov))
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10, 1e-12)
    raise EmbeddingFailure("covariance not positive definite even with jitter")


def gen_fbm(h: float, n: int, seed: int) -> np.ndarray:
    """Fractional Brownian motion path: cumulative sum of fGn increments."""
    return np.cumsum(gen_fgn(h, n, seed))


def gen_white_noise(n: int, seed: int, sd: float = 1.0) -> np.ndarray:
    return sd * np.random.default_rng(seed).standard_normal(n)


def gen_var_coupled(adjacency, noise_sd: float, n: int, seed: int,
                    burn: int = 100) -> Panel:
    """VAR(1) system x_t = A x_{t-1} + eps_t with i.i.d. Gaussian noise.

    Row i of A collects the couplings feeding series i, so A[i, j] != 0 means
    j drives i at lag one. The true directed-coupling mask is attached to the
    panel metadata (mask[i, j] is True when j -> i).
    """
    a = np.asarray(adjacency, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    k = a.shape[0]
    radius = np.max(np.abs(np.linalg.eigvals(a)))
    if radius >= 1.0:
        raise Unstable(f"spectral radius {radius:.3f} >= 1")
    rng = np.random.default_rng(seed)
    eps = noise_sd * rng.standard_normal((burn + n, k))
    x = np.zeros((burn + n, k))
    x[0] = eps[0]
    for t in range(1, burn + n):
        x[t] = a @ x[t - 1] + eps[t]
    x = x[burn:]
    axis = _axis(n)
    series = tuple(
        TimeSeries.from_arrays(f"x{j + 1}", axis, x[:, j]) for j in range(k)
    )
    return Panel(series, tuple(axis), meta={"true_adjacency": a != 0.0})


def gen_piecewise(n: int, knots, levels, slopes, amplitude: float = 0.0,
                  period: float = 7.0, noise_sd: float = 0.0, seed: int = 0,
                  sid: str = "synthetic") -> TimeSeries:
    """Piecewise-linear trend plus optional sinusoidal season plus noise.

    Segment j runs from knot j-1 (or 0) to knot j (exclusive) and contributes
    levels[j] + slopes[j]*(t - segment_start). The ground-truth changepoint
    list is stored under meta["trend_knots"].
    """
    knots = tuple(int(t) for t in knots)
    if any(b <= a for a, b in zip(knots, knots[1:])):
        raise ValueError("knots must be strictly increasing")
    if knots and (knots[0] <= 0 or knots[-1] >= n):
        raise ValueError("knots must be interior to (0, n)")
    if len(levels) != len(knots) + 1 or len(slopes) != len(knots) + 1:
        raise ValueError("need one (level, slope) pair per segment")
    if amplitude != 0.0 and period < 2:
        raise OutOfRange("period must be >= 2")
    t = np.arange(n)
    y = np.empty(n, dtype=float)
    bounds = (0,) + knots + (n,)
    for j, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        seg = np.arange(a, b)
        y[a:b] = levels[j] + slopes[j] * (seg - a)
    if amplitude != 0.0:
        y += amplitude * np.sin(2 * np.pi * t / period)
    if noise_sd > 0:
        y += noise_sd * np.random.default_rng(seed).standard_normal(n)
    meta = {
        "generator": "piecewise_trend_seasonal",
        "trend_knots": knots,
        "amplitude": amplitude,
        "period": period,
        "noise_sd": noise_sd,
    }
    return TimeSeries.from_arrays(sid, _axis(n), y, "raw", meta)


def gen_gaussian_pair(rho: float, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Bivariate standard Gaussians with correlation rho."""
    if not -1 < rho < 1:
        raise OutOfRange("rho must lie in (-1, 1)")
    rng = np.random.default_rng(seed)
    z1 = rng.standard_normal(n)
    z2 = rng.standard_normal(n)
    return z1, rho * z1 + np.sqrt(1 - rho * rho) * z2


def brute_force_mi(table) -> float:
    """Mutual information of a discrete joint by direct double summation (nats)."""
    counts = np.asarray(getattr(table, "counts", table), dtype=float)
    n = counts.sum()
    if n <= 0:
        raise ValueError("empty table")
    px = counts.sum(axis=1) / n
    py = counts.sum(axis=0) / n
    total = 0.0
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            pxy = counts[i, j] / n
            if pxy > 0:
                total += pxy * np.log(pxy / (px[i] * py[j]))
    return float(total)


def gaussian_mi_oracle(rho: float) -> float:
    """Analytic MI of a bivariate Gaussian: -0.5*ln(1 - rho^2), in nats."""
    if not -1 < rho < 1:
        raise OutOfRange("rho must lie in (-1, 1)")
    return float(-0.5 * np.log1p(-rho * rho))


_KINDS = ("fgn", "fbm", "white_noise", "var_coupled", "piecewise_trend_seasonal")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n < 16:
            raise ValueError("n must be >= 16")


def generate(spec: GeneratorSpec) -> Panel:
    """Dispatch a GeneratorSpec to its generator; always returns a Panel."""
    p = spec.params
    axis = _axis(spec.n)
    if spec.kind == "fgn":
        vals = gen_fgn(p.get("h", 0.5), spec.n, spec.seed)
        return Panel((TimeSeries.from_arrays("fgn", axis, vals),), tuple(axis))
    if spec.kind == "fbm":
        vals = gen_fbm(p.get("h", 0.5), spec.n, spec.seed)
        return Panel((TimeSeries.from_arrays("fbm", axis, vals),), tuple(axis))
    if spec.kind == "white_noise":
        vals = gen_white_noise(spec.n, spec.seed, p.get("sd", 1.0))
        return Panel((TimeSeries.from_arrays("white_noise", axis, vals),), tuple(axis))
    if spec.kind == "var_coupled":
        return gen_var_coupled(p["adjacency"], p.get("noise_sd", 1.0), spec.n, spec.seed)
    series = gen_piecewise(
        spec.n, p.get("knots", ()), p.get("levels", (0.0,)), p.get("slopes", (0.0,)),
        p.get("amplitude", 0.0), p.get("period", 7.0), p.get("noise_sd", 0.0), spec.seed,
    )
    return Panel((series,), series.dates)
