"""Rescaled-range and generalized Hurst exponent estimation.

Two estimators:

* R/S with the small-sample expected-value correction (subtract the white-noise
  expectation curve before regressing, then add 0.5). Operates on return-like
  increments.
* GHE: slope of log K_q(tau) against log tau, where K_q(tau) is the q-th
  absolute moment of tau-step increments of a level series (e.g. log prices),
  averaged over a ladder of tau_max cut-offs.

H = 0.5 marks the efficient band; below is anti-persistent (mean-reverting),
above is persistent.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import (
    DegenerateSubseries,
    InsufficientScales,
    NonFiniteMoment,
    OutOfRange,
    ShortWindowWarning,
    TooShort,
)
from .series import RollingSeries, RollingWindowSpec, TimeSeries, rolling_apply

DEFAULT_TAU_MAXES = tuple(range(5, 20))


@dataclass(frozen=True)
class HurstEstimate:
    h: float
    method: str  # "rs" or "ghe"
    q: float
    fit_r2: float
    n_scales: int
    clamped: bool = False


@dataclass(frozen=True)
class ScaleCurve:
    scales: tuple[int, ...]
    statistic: tuple[float, ...]

    def __post_init__(self):
        if len(self.scales) != len(self.statistic):
            raise ValueError("scales and statistic must have equal length")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ValueError("scales must be strictly increasing")
        if any(v <= 0 for v in self.statistic):
            raise ValueError("statistic values must be positive")


def rs_statistic(x, n: int) -> float:
    """Mean rescaled range over the d = floor(len/n) complete subseries.

    Each subseries is demeaned, cumulated, and its cumulative range divided by
    its standard deviation. Constant subseries are skipped; if every subseries
    is constant the statistic is undefined.
    """
    vals = np.asarray(getattr(x, "values", x), dtype=float)
    if n < 8:
        raise InsufficientScales(f"subseries length must be >= 8, got {n}")
    d = len(vals) // n
    if d < 2:
        raise TooShort(f"need >= 2 complete subseries of length {n}, have {d}")
    blocks = vals[: d * n].reshape(d, n)
    dev = blocks - blocks.mean(axis=1, keepdims=True)
    cum = np.cumsum(dev, axis=1)
    ranges = cum.max(axis=1) - cum.min(axis=1)
    sds = blocks.std(axis=1)
    keep = sds > 0
    if not keep.any():
        raise DegenerateSubseries("all subseries are constant")
    return float(np.mean(ranges[keep] / sds[keep]))


def expected_rs(n: int) -> float:
    """Expected R/S of white noise at subseries length n.

    The two branches (a Gamma-ratio form for n <= 340 and a sqrt form above,
    where the Gamma ratio would overflow naive evaluation) agree to within 1%
    at the boundary. The large-n prefactor is read as 1/sqrt(n*pi/2), the
    standard small-sample-correction form.
    """
    if n < 2:
        raise OutOfRange("n must be >= 2")
    i = np.arange(1, n)
    s = np.sum(np.sqrt((n - i) / i))
    front = (n - 0.5) / n
    if n <= 340:
        ratio = np.exp(gammaln((n - 1) / 2.0) - gammaln(n / 2.0))
        return float(front * ratio / np.sqrt(np.pi) * s)
    return float(front * s / np.sqrt(n * np.pi / 2.0))


def _ols_loglog(logx: np.ndarray, logy: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(logx, logy, 1)
    fitted = slope * logx + intercept
    sst = np.sum((logy - logy.mean()) ** 2)
    sse = np.sum((logy - fitted) ** 2)
    r2 = 1.0 if sst == 0 else 1.0 - sse / sst
    return float(slope), float(r2)


def default_rs_scales(length: int) -> tuple[int, ...]:
    """Dyadic subseries lengths from 16 up to length // 8."""
    scales = []
    n = 16
    while n <= length // 8:
        scales.append(n)
        n *= 2
    return tuple(scales)


def hurst_rs(x, scales=None, corrected: bool = True) -> HurstEstimate:
    """Hurst exponent from the log-log regression of R/S against scale.

    In corrected mode (the default) the white-noise expectation curve
    expected_rs(n) is subtracted in log space before fitting and 0.5 is added
    back, which removes the substantial small-sample bias of the raw slope.
    """
    vals = np.asarray(getattr(x, "values", x), dtype=float)
    if scales is None:
        scales = default_rs_scales(len(vals))
    scales = tuple(sorted(int(s) for s in set(scales)))
    if len(scales) < 4:
        raise InsufficientScales(f"need >= 4 scales, got {len(scales)}")
    if len(vals) < 2 * max(scales):
        raise TooShort("series shorter than twice the largest scale")
    logn = np.log(np.array(scales, dtype=float))
    logrs = np.log([rs_statistic(vals, s) for s in scales])
    if corrected:
        logrs = logrs - np.log([expected_rs(s) for s in scales])
    slope, r2 = _ols_loglog(logn, logrs)
    h = slope + 0.5 if corrected else slope
    clamped = not 0.0 <= h <= 1.0
    return HurstEstimate(float(min(max(h, 0.0), 1.0)), "rs", 1.0, r2, len(scales), clamped)


def ghe(x, q: float = 1.0, tau_maxes=DEFAULT_TAU_MAXES) -> HurstEstimate:
    """Generalized Hurst exponent of a level series.

    For each tau, K_q(tau) is the mean q-th absolute moment of tau-step
    increments; the scaling K_q(tau) ~ tau^(qH) gives H as the log-log slope
    divided by q. The fit is repeated for every tau_max in `tau_maxes` and the
    estimates averaged. The level normalisation of K_q is a tau-independent
    constant, so it is absorbed into the regression intercept.
    """
    vals = np.asarray(getattr(x, "values", x), dtype=float)
    if q <= 0:
        raise OutOfRange("q must be positive")
    tau_maxes = tuple(sorted(set(int(t) for t in tau_maxes)))
    if not tau_maxes or tau_maxes[0] < 2:
        raise InsufficientScales("each tau_max must be >= 2")
    top = tau_maxes[-1]
    if len(vals) < 10 * top:
        raise TooShort(f"need >= {10 * top} observations for tau_max={top}")
    kq = np.empty(top)
    for tau in range(1, top + 1):
        m = np.mean(np.abs(vals[tau:] - vals[:-tau]) ** q)
        if not np.isfinite(m):
            raise NonFiniteMoment(f"non-finite moment at tau={tau}")
        if m == 0:
            raise NonFiniteMoment(f"zero q-th moment at tau={tau} (constant series?)")
        kq[tau - 1] = m
    logtau = np.log(np.arange(1, top + 1, dtype=float))
    logk = np.log(kq)
    hs, r2s = [], []
    for tmax in tau_maxes:
        slope, r2 = _ols_loglog(logtau[:tmax], logk[:tmax])
        hs.append(slope / q)
        r2s.append(r2)
    h = float(np.mean(hs))
    clamped = not 0.0 <= h <= 1.0
    return HurstEstimate(float(min(max(h, 0.0), 1.0)), "ghe", float(q),
                         float(np.mean(r2s)), top, clamped)


def rolling_ghe(s: TimeSeries, spec: RollingWindowSpec | None = None,
                q: float = 1.0, tau_maxes=DEFAULT_TAU_MAXES) -> RollingSeries:
    """Rolling GHE over a level series; default window 75, step 1.

    tau_maxes entries incompatible with the window length (window < 10*tau_max)
    are trimmed so each window satisfies the ghe length precondition.
    """
    if spec is None:
        spec = RollingWindowSpec(75, 1)
    if spec.window_len < 60:
        warnings.warn(f"window {spec.window_len} below the recommended minimum of 60",
                      ShortWindowWarning, stacklevel=2)
    usable = tuple(t for t in tau_maxes if 10 * t <= spec.window_len)
    if not usable:
        raise InsufficientScales(
            f"no tau_max in {tuple(tau_maxes)} fits a window of {spec.window_len}")
    return rolling_apply(s, spec, lambda w: ghe(w, q, usable).h, statistic="ghe_h")


def fractal_dimension(h: float) -> float:
    """D = 2 - H for a self-affine record."""
    if not 0.0 <= h <= 1.0:
        raise OutOfRange(f"h must lie in [0,1], got {h}")
    return 2.0 - h


def spectral_exponent(h: float) -> float:
    """Power-spectrum exponent beta = 2H + 1 of the integrated series."""
    if not 0.0 <= h <= 1.0:
        raise OutOfRange(f"h must lie in [0,1], got {h}")
    return 2.0 * h + 1.0


def classify_efficiency(h: float, band: float = 0.05) -> str:
    """anti_persistent / efficient_band / persistent around H = 0.5."""
    if not 0.0 <= h <= 1.0:
        raise OutOfRange(f"h must lie in [0,1], got {h}")
    if h < 0.5 - band:
        return "anti_persistent"
    if h > 0.5 + band:
        return "persistent"
    return "efficient_band"
