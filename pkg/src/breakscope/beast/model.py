"""Piecewise trend + harmonic season regression models with unknown knots.

A model structure places trend knots (segment boundaries for a piecewise
linear trend) and seasonal knots (boundaries for piecewise harmonic blocks
of per-segment order) on a shared axis of n observations. Conditional on a
structure and the coefficient scale nu (prior covariance sigma^2 nu (X'X)^-1),
coefficients and noise variance integrate out in closed form, which is what
the trans-dimensional sampler scores proposals with.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from ..errors import NumericalUnderflow, SingularSegment

__all__ = [
    "Hyperparams",
    "ModelStructure",
    "design_matrix",
    "trend_design",
    "seasonal_design",
    "log_marginal_likelihood",
    "log_structure_prior",
    "n_knot_configs",
    "admissible_positions",
    "segment_bounds",
]


@dataclass(frozen=True)
class Hyperparams:
    """Sampler configuration and priors.

    min_seg of None resolves to max(10, ceil(0.05 n)) when a series length
    is known. nu_fixed pins the coefficient scale (skipping its draw);
    flat_likelihood replaces the evidence with a constant so chains sample
    the structural prior alone. nu_shape must keep prior density vanishing
    at nu = 0: near-zero scale makes every knot layout score like the empty
    model, so a mass spike there lets the knot count drift to its prior.
    """

    cp_max: int = 20
    min_seg: int | None = None
    l_order_max: int = 3
    period: float = 7.0
    season_mode: str = "harmonic"
    sigma2_shape: float = 1e-4
    sigma2_scale: float = 1e-4
    nu_shape: float = 2.0
    nu_rate: float = 0.01
    chains: int = 3
    samples: int = 10000
    burn_in: int = 2000
    seed: int = 0
    cp_prob_min: float = 0.1
    eps_slope: float = 0.1
    nu_fixed: float | None = None
    flat_likelihood: bool = False

    def __post_init__(self):
        if self.cp_max < 0:
            raise ValueError("cp_max must be >= 0")
        if self.min_seg is not None and self.min_seg < 2:
            raise ValueError("min_seg must be >= 2")
        if self.l_order_max < 1:
            raise ValueError("l_order_max must be >= 1")
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.season_mode not in ("harmonic", "none"):
            raise ValueError(f"unknown season_mode {self.season_mode!r}")
        for name in ("sigma2_shape", "sigma2_scale", "nu_shape", "nu_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.chains < 1 or self.samples < 1:
            raise ValueError("chains and samples must be positive")
        if not 0 <= self.burn_in < self.samples:
            raise ValueError("burn_in must lie in [0, samples)")
        if self.nu_fixed is not None and self.nu_fixed <= 0:
            raise ValueError("nu_fixed must be positive")

    def resolve_min_seg(self, n: int) -> int:
        if self.min_seg is not None:
            return self.min_seg
        return max(10, math.ceil(0.05 * n))


@dataclass(frozen=True)
class ModelStructure:
    """Knot layout: where trend segments break, where seasonal blocks break,
    and each seasonal block's harmonic order."""

    trend_knots: tuple[int, ...] = ()
    seasonal_knots: tuple[int, ...] = ()
    harmonic_orders: tuple[int, ...] = (1,)
    period: float = 7.0
    season_mode: str = "harmonic"

    def __post_init__(self):
        if self.season_mode not in ("harmonic", "none"):
            raise ValueError(f"unknown season_mode {self.season_mode!r}")
        if self.season_mode == "harmonic":
            if len(self.harmonic_orders) != len(self.seasonal_knots) + 1:
                raise ValueError("need one harmonic order per seasonal segment")
            if any(l < 1 for l in self.harmonic_orders):
                raise ValueError("harmonic orders must be >= 1")
        elif self.seasonal_knots:
            raise ValueError("seasonal knots require season_mode='harmonic'")
        for knots in (self.trend_knots, self.seasonal_knots):
            if any(b <= a for a, b in zip(knots, knots[1:])):
                raise ValueError("knots must be strictly increasing")

    @property
    def n_trend_knots(self) -> int:
        return len(self.trend_knots)

    @property
    def n_seasonal_knots(self) -> int:
        return len(self.seasonal_knots)

    def n_columns(self) -> int:
        cols = 2 * (len(self.trend_knots) + 1)
        if self.season_mode == "harmonic":
            cols += sum(2 * l for l in self.harmonic_orders)
        return cols

    def validate(self, n: int, hyper: Hyperparams) -> None:
        """Raise if the structure is not admissible on an n-point axis."""
        s = hyper.resolve_min_seg(n)
        for label, knots in (("trend", self.trend_knots), ("seasonal", self.seasonal_knots)):
            if len(knots) > hyper.cp_max:
                raise ValueError(f"{label} knot count {len(knots)} > cp_max {hyper.cp_max}")
            for lo, hi in segment_bounds(knots, n):
                if hi - lo < s:
                    raise ValueError(f"{label} segment [{lo}, {hi}) shorter than min_seg {s}")
        if self.season_mode == "harmonic" and any(
                l > hyper.l_order_max for l in self.harmonic_orders):
            raise ValueError(f"harmonic order exceeds l_order_max {hyper.l_order_max}")

    def with_trend_knots(self, knots: tuple[int, ...]) -> "ModelStructure":
        return replace(self, trend_knots=tuple(knots))

    def with_seasonal(self, knots: tuple[int, ...], orders: tuple[int, ...]) -> "ModelStructure":
        return replace(self, seasonal_knots=tuple(knots), harmonic_orders=tuple(orders))


def segment_bounds(knots: tuple[int, ...], n: int) -> list[tuple[int, int]]:
    """Half-open [start, end) index ranges induced by interior knots."""
    edges = (0,) + tuple(knots) + (n,)
    return list(zip(edges[:-1], edges[1:]))


def trend_design(trend_knots: tuple[int, ...], n: int) -> np.ndarray:
    """Per segment: an indicator column and a within-segment ramp (t - start)/n.

    The ramp is scaled by the axis length so coefficients stay comparable
    across segment lengths; a fitted slope per observation step is b/n.
    """
    cols = []
    t = np.arange(n, dtype=float)
    for lo, hi in segment_bounds(trend_knots, n):
        if hi - lo < 2:
            raise SingularSegment(f"trend segment [{lo}, {hi}) has fewer points than columns")
        mask = np.zeros(n)
        mask[lo:hi] = 1.0
        cols.append(mask)
        ramp = np.zeros(n)
        ramp[lo:hi] = (t[lo:hi] - lo) / n
        cols.append(ramp)
    return np.column_stack(cols)


def seasonal_design(seasonal_knots: tuple[int, ...], orders: tuple[int, ...],
                    period: float, n: int) -> np.ndarray:
    """Per seasonal segment and harmonic l <= L_k: masked sin/cos(2 pi l t / P).

    The phase argument uses the absolute index so the harmonic clock does
    not reset at knots; only amplitudes change between segments.
    """
    t = np.arange(n, dtype=float)
    cols = []
    for (lo, hi), order in zip(segment_bounds(seasonal_knots, n), orders):
        if hi - lo < 2 * order:
            raise SingularSegment(
                f"seasonal segment [{lo}, {hi}) has fewer points than 2*{order} columns")
        for l in range(1, order + 1):
            phase = 2.0 * np.pi * l * t / period
            for wave in (np.sin(phase), np.cos(phase)):
                col = np.zeros(n)
                col[lo:hi] = wave[lo:hi]
                cols.append(col)
    return np.column_stack(cols)


def design_matrix(structure: ModelStructure, n: int) -> np.ndarray:
    """Full regression basis; trend block first, seasonal block after."""
    blocks = [trend_design(structure.trend_knots, n)]
    if structure.season_mode == "harmonic":
        blocks.append(seasonal_design(structure.seasonal_knots,
                                      structure.harmonic_orders,
                                      structure.period, n))
    return np.hstack(blocks)


def _gram_factor(xtx: np.ndarray, xty: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Cholesky of X'X, the least-squares solution, and the fitted energy.

    These are nu-free, so one factorization serves every evidence
    evaluation for the structure.
    """
    try:
        chol = np.linalg.cholesky(xtx)
    except np.linalg.LinAlgError as exc:
        raise NumericalUnderflow(f"Gram matrix not positive definite: {exc}") from exc
    beta_hat = np.linalg.solve(chol.T, np.linalg.solve(chol, xty))
    return chol, beta_hat, float(xty @ beta_hat)


def _evidence_scalar(fit_q: float, yty: float, p: int, n: int,
                     hyper: Hyperparams, nu: float) -> float:
    """Evidence given the fitted energy q = y'X (X'X)^-1 X'y.

    Coefficients carry the evidence-normalized prior
    Normal(0, sigma2 * nu * (X'X)^-1) and the noise an inverse-gamma
    prior, so beta and sigma2 integrate out exactly; nu only enters
    through the shrinkage weight nu/(1+nu) and a (p/2) log(1+nu) volume
    term, which keeps extra columns from ever becoming free.
    """
    a0, b0 = hyper.sigma2_shape, hyper.sigma2_scale
    a_n = a0 + 0.5 * n
    w = nu / (1.0 + nu)
    b_n = b0 + 0.5 * (yty - w * fit_q)
    if b_n <= 0 or not np.isfinite(b_n):
        raise NumericalUnderflow(f"posterior scale collapsed to {b_n}")
    logml = (-0.5 * n * math.log(2.0 * math.pi)
             - 0.5 * p * math.log1p(nu)
             + a0 * math.log(b0) - gammaln(a0)
             + gammaln(a_n) - a_n * math.log(b_n))
    if not np.isfinite(logml):
        raise NumericalUnderflow(f"log evidence not finite: {logml}")
    return float(logml)


def _evidence_from_gram(xtx: np.ndarray, xty: np.ndarray, yty: float, n: int,
                        hyper: Hyperparams, nu: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Log evidence plus the posterior scale factor and mean.

    The returned Cholesky factor L satisfies (L L')^-1 = posterior
    covariance of beta divided by sigma2, ready for coefficient draws.
    """
    chol, beta_hat, fit_q = _gram_factor(xtx, xty)
    p = xtx.shape[0]
    logml = _evidence_scalar(fit_q, yty, p, n, hyper, nu)
    w = nu / (1.0 + nu)
    return logml, chol / math.sqrt(w), w * beta_hat


def log_marginal_likelihood(structure: ModelStructure, y: np.ndarray,
                            hyper: Hyperparams, nu: float = 1.0) -> float:
    """Closed-form conjugate evidence of y under one structure, given nu."""
    y = np.asarray(y, dtype=float)
    x = design_matrix(structure, len(y))
    logml, _, _ = _evidence_from_gram(x.T @ x, x.T @ y, float(y @ y), len(y), hyper, nu)
    return logml


def n_knot_configs(n: int, m: int, min_seg: int) -> int:
    """Number of admissible m-knot layouts on an n-point axis.

    Positions live in [min_seg, n - min_seg] with pairwise gaps >= min_seg;
    collapsing each required gap turns the count into a plain combination.
    """
    if m == 0:
        return 1
    n_pos = n - 2 * min_seg + 1
    free = n_pos - (m - 1) * (min_seg - 1)
    if free < m:
        return 0
    return math.comb(free, m)


def admissible_positions(knots: tuple[int, ...], n: int, min_seg: int) -> np.ndarray:
    """Interior indices where one more knot could go, given existing knots."""
    ok = np.zeros(n, dtype=bool)
    ok[min_seg: n - min_seg + 1] = True
    for tau in knots:
        ok[max(0, tau - min_seg + 1): tau + min_seg] = False
    return np.flatnonzero(ok)


def log_structure_prior(structure: ModelStructure, n: int, hyper: Hyperparams) -> float:
    """Uniform knot count (0..cp_max), uniform layout given the count,
    uniform harmonic order per seasonal segment."""
    s = hyper.resolve_min_seg(n)
    parts = [-math.log(hyper.cp_max + 1)]
    n_t = n_knot_configs(n, len(structure.trend_knots), s)
    if n_t == 0:
        return -math.inf
    parts.append(-math.log(n_t))
    if structure.season_mode == "harmonic":
        parts.append(-math.log(hyper.cp_max + 1))
        n_s = n_knot_configs(n, len(structure.seasonal_knots), s)
        if n_s == 0:
            return -math.inf
        parts.append(-math.log(n_s))
        parts.append(-len(structure.harmonic_orders) * math.log(hyper.l_order_max))
    return float(sum(parts))
