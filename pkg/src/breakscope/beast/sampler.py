"""Trans-dimensional Gibbs sampler over knot structures and coefficients.

Each sweep proposes one structure move (knot birth, death, or relocation,
or a harmonic-order change), scores it by conjugate evidence times the
structural prior with a Hastings correction, then refreshes coefficients,
noise variance, and the ridge precision from their full conditionals.
Summaries are accumulated streaming; no sample store grows with the sweep
count except a thinned buffer of fitted curves for the credible bands.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import (
    NotConvergedWarning,
    NumericalUnderflow,
    SingularSegment,
    TooShort,
    ZeroVariance,
)
from .model import (
    Hyperparams,
    ModelStructure,
    admissible_positions,
    design_matrix,
    log_structure_prior,
    segment_bounds,
    _evidence_scalar,
    _gram_factor,
)
from .summary import ExtractedChangepoint, PosteriorSummary, extract_changepoints

__all__ = ["rjmcmc_step", "run_sampler", "sample_coefficients", "ChainState"]


@dataclass
class ChainState:
    """One chain's current structure plus its nu-free evidence cache.

    chol factors X'X and fit_q = y'X (X'X)^-1 X'y, so re-scoring the same
    structure at a new nu is a few scalar operations.
    """

    structure: ModelStructure
    beta: np.ndarray
    sigma2: float
    nu: float
    x: np.ndarray
    logml: float
    logprior: float
    chol: np.ndarray
    beta_hat: np.ndarray
    fit_q: float


def _make_state(structure: ModelStructure, y: np.ndarray, hyper: Hyperparams,
                nu: float) -> ChainState:
    n = len(y)
    x = design_matrix(structure, n)
    p = x.shape[1]
    if hyper.flat_likelihood:
        logml, chol, beta_hat, fit_q = 0.0, np.eye(p), np.zeros(p), 0.0
    else:
        chol, beta_hat, fit_q = _gram_factor(x.T @ x, x.T @ y)
        logml = _evidence_scalar(fit_q, float(y @ y), p, n, hyper, nu)
    return ChainState(structure, np.zeros(p), 1.0, nu, x, logml,
                      log_structure_prior(structure, n, hyper), chol, beta_hat, fit_q)


# ---------------------------------------------------------------------------
# structure moves: each returns (new_structure, log_hastings) or None when
# impossible in the current state. log_hastings = log q(reverse) - log q(forward).

def propose_trend_birth(structure: ModelStructure, n: int, min_seg: int,
                        cp_max: int, rng) -> tuple[ModelStructure, float] | None:
    if len(structure.trend_knots) >= cp_max:
        return None
    free = admissible_positions(structure.trend_knots, n, min_seg)
    if len(free) == 0:
        return None
    tau = int(free[rng.integers(len(free))])
    knots = tuple(sorted(structure.trend_knots + (tau,)))
    lh = math.log(len(free)) - math.log(len(knots))
    return structure.with_trend_knots(knots), lh


def propose_trend_death(structure: ModelStructure, n: int, min_seg: int,
                        rng) -> tuple[ModelStructure, float] | None:
    m = len(structure.trend_knots)
    if m == 0:
        return None
    tau = structure.trend_knots[rng.integers(m)]
    knots = tuple(k for k in structure.trend_knots if k != tau)
    free_after = admissible_positions(knots, n, min_seg)
    lh = math.log(m) - math.log(len(free_after))
    return structure.with_trend_knots(knots), lh


def _move_window(knots: tuple[int, ...], idx: int, n: int, min_seg: int) -> tuple[int, int]:
    lo = knots[idx - 1] + min_seg if idx > 0 else min_seg
    hi = knots[idx + 1] - min_seg if idx + 1 < len(knots) else n - min_seg
    return lo, hi


def propose_trend_move(structure: ModelStructure, n: int, min_seg: int,
                       rng) -> tuple[ModelStructure, float] | None:
    m = len(structure.trend_knots)
    if m == 0:
        return None
    idx = int(rng.integers(m))
    lo, hi = _move_window(structure.trend_knots, idx, n, min_seg)
    tau = int(rng.integers(lo, hi + 1))
    knots = list(structure.trend_knots)
    knots[idx] = tau
    # window depends only on the neighbors, so forward and reverse cancel
    return structure.with_trend_knots(tuple(knots)), 0.0


def propose_trend_exchange(structure: ModelStructure, n: int, min_seg: int,
                           rng) -> tuple[ModelStructure, float] | None:
    """Relocate one knot anywhere admissible given the others.

    Unlike the windowed move this can cross neighbors, which unsticks
    layouts where min_seg pins a knot on the wrong side of a feature.
    Forward and reverse draw from the same slot set, so the correction
    is exactly zero.
    """
    m = len(structure.trend_knots)
    if m == 0:
        return None
    tau = structure.trend_knots[rng.integers(m)]
    rest = tuple(k for k in structure.trend_knots if k != tau)
    free = admissible_positions(rest, n, min_seg)
    new = int(free[rng.integers(len(free))])
    return structure.with_trend_knots(tuple(sorted(rest + (new,)))), 0.0


def _split_pair_count(tau: int, lo: int, hi: int, s: int) -> int:
    """Pairs (a, b) with lo <= a <= tau <= b <= hi and b - a >= s."""
    a = np.arange(lo, tau + 1)
    bmin = np.maximum(a + s, tau)
    return int(np.maximum(0, hi - bmin + 1).sum())


def _draw_split_pair(tau: int, lo: int, hi: int, s: int, rng) -> tuple[int, int]:
    a = np.arange(lo, tau + 1)
    bmin = np.maximum(a + s, tau)
    counts = np.maximum(0, hi - bmin + 1)
    cum = np.cumsum(counts)
    r = int(rng.integers(cum[-1]))
    i = int(np.searchsorted(cum, r, side="right"))
    prev = cum[i - 1] if i > 0 else 0
    return int(a[i]), int(bmin[i] + (r - prev))


def _pair_bounds(knots: tuple[int, ...], idx_lo: int, idx_hi: int, n: int,
                 s: int) -> tuple[int, int]:
    """Slot range between the neighbors outside knots[idx_lo..idx_hi]."""
    lo = knots[idx_lo - 1] + s if idx_lo > 0 else s
    hi = knots[idx_hi + 1] - s if idx_hi + 1 < len(knots) else n - s
    return lo, hi


def propose_trend_split(structure: ModelStructure, n: int, min_seg: int,
                        cp_max: int, rng) -> tuple[ModelStructure, float] | None:
    """Replace one knot tau with a straddling pair (a <= tau <= b)."""
    m = len(structure.trend_knots)
    if m == 0 or m >= cp_max:
        return None
    idx = int(rng.integers(m))
    tau = structure.trend_knots[idx]
    lo, hi = _pair_bounds(structure.trend_knots, idx, idx, n, min_seg)
    total = _split_pair_count(tau, lo, hi, min_seg)
    if total == 0:
        return None
    a, b = _draw_split_pair(tau, lo, hi, min_seg, rng)
    knots = structure.trend_knots[:idx] + (a, b) + structure.trend_knots[idx + 1:]
    # reverse merge draws uniformly over [a, b], all of which is admissible
    lh = math.log(total) - math.log(b - a + 1)
    return structure.with_trend_knots(knots), lh


def propose_trend_merge(structure: ModelStructure, n: int, min_seg: int,
                        rng) -> tuple[ModelStructure, float] | None:
    """Collapse an adjacent pair into one knot between them.

    The target is drawn inside the pair's span, so a bracket pinned around
    a sharp feature by the min_seg exclusion zone can land exactly on it;
    plain death then relocation cannot, which is how chains get stuck.
    """
    m = len(structure.trend_knots)
    if m < 2:
        return None
    i = int(rng.integers(m - 1))
    a, b = structure.trend_knots[i], structure.trend_knots[i + 1]
    tau = int(rng.integers(a, b + 1))
    lo, hi = _pair_bounds(structure.trend_knots, i, i + 1, n, min_seg)
    knots = structure.trend_knots[:i] + (tau,) + structure.trend_knots[i + 2:]
    lh = math.log(b - a + 1) - math.log(_split_pair_count(tau, lo, hi, min_seg))
    return structure.with_trend_knots(knots), lh


def propose_seasonal_birth(structure: ModelStructure, n: int, min_seg: int,
                           cp_max: int, l_max: int, rng) -> tuple[ModelStructure, float] | None:
    p = len(structure.seasonal_knots)
    if p >= cp_max:
        return None
    free = admissible_positions(structure.seasonal_knots, n, min_seg)
    if len(free) == 0:
        return None
    xi = int(free[rng.integers(len(free))])
    seg = sum(1 for k in structure.seasonal_knots if k < xi)
    knots = tuple(sorted(structure.seasonal_knots + (xi,)))
    orders = list(structure.harmonic_orders)
    # the split segment's children get fresh uniform orders; the reverse
    # death redraws one merged order, so one 1/l_max survives in the ratio
    children = (int(rng.integers(1, l_max + 1)), int(rng.integers(1, l_max + 1)))
    orders[seg: seg + 1] = children
    lh = math.log(len(free)) - math.log(p + 1) + math.log(l_max)
    return structure.with_seasonal(knots, tuple(orders)), lh


def propose_seasonal_death(structure: ModelStructure, n: int, min_seg: int,
                           l_max: int, rng) -> tuple[ModelStructure, float] | None:
    p = len(structure.seasonal_knots)
    if p == 0:
        return None
    idx = int(rng.integers(p))
    xi = structure.seasonal_knots[idx]
    knots = tuple(k for k in structure.seasonal_knots if k != xi)
    orders = list(structure.harmonic_orders)
    merged = int(rng.integers(1, l_max + 1))
    orders[idx: idx + 2] = [merged]
    free_after = admissible_positions(knots, n, min_seg)
    lh = math.log(p) - math.log(len(free_after)) - math.log(l_max)
    return structure.with_seasonal(knots, tuple(orders)), lh


def propose_seasonal_move(structure: ModelStructure, n: int, min_seg: int,
                          rng) -> tuple[ModelStructure, float] | None:
    p = len(structure.seasonal_knots)
    if p == 0:
        return None
    idx = int(rng.integers(p))
    lo, hi = _move_window(structure.seasonal_knots, idx, n, min_seg)
    xi = int(rng.integers(lo, hi + 1))
    knots = list(structure.seasonal_knots)
    knots[idx] = xi
    return structure.with_seasonal(tuple(knots), structure.harmonic_orders), 0.0


def propose_seasonal_exchange(structure: ModelStructure, n: int, min_seg: int,
                              l_max: int, rng) -> tuple[ModelStructure, float] | None:
    """Seasonal analog of the exchange move.

    Relocation can reorder segments, so all per-segment orders are redrawn
    uniformly; the order-proposal mass is (1/l_max)^(p+1) both ways and
    cancels along with the slot term.
    """
    p = len(structure.seasonal_knots)
    if p == 0:
        return None
    xi = structure.seasonal_knots[rng.integers(p)]
    rest = tuple(k for k in structure.seasonal_knots if k != xi)
    free = admissible_positions(rest, n, min_seg)
    new = int(free[rng.integers(len(free))])
    knots = tuple(sorted(rest + (new,)))
    orders = tuple(int(rng.integers(1, l_max + 1)) for _ in range(p + 1))
    return structure.with_seasonal(knots, orders), 0.0


def propose_order_change(structure: ModelStructure, l_max: int,
                         rng) -> tuple[ModelStructure, float] | None:
    if structure.season_mode != "harmonic":
        return None
    orders = list(structure.harmonic_orders)
    idx = int(rng.integers(len(orders)))
    orders[idx] = int(rng.integers(1, l_max + 1))
    return structure.with_seasonal(structure.seasonal_knots, tuple(orders)), 0.0


_TREND_MOVES = ("trend_birth", "trend_death", "trend_move", "trend_exchange",
                "trend_split", "trend_merge")
_SEASONAL_MOVES = ("seasonal_birth", "seasonal_death", "seasonal_move",
                   "seasonal_exchange", "order_change")


def _propose(move: str, structure: ModelStructure, n: int, hyper: Hyperparams,
             min_seg: int, rng):
    if move == "trend_birth":
        return propose_trend_birth(structure, n, min_seg, hyper.cp_max, rng)
    if move == "trend_death":
        return propose_trend_death(structure, n, min_seg, rng)
    if move == "trend_move":
        return propose_trend_move(structure, n, min_seg, rng)
    if move == "trend_exchange":
        return propose_trend_exchange(structure, n, min_seg, rng)
    if move == "trend_split":
        return propose_trend_split(structure, n, min_seg, hyper.cp_max, rng)
    if move == "trend_merge":
        return propose_trend_merge(structure, n, min_seg, rng)
    if move == "seasonal_birth":
        return propose_seasonal_birth(structure, n, min_seg, hyper.cp_max,
                                      hyper.l_order_max, rng)
    if move == "seasonal_death":
        return propose_seasonal_death(structure, n, min_seg, hyper.l_order_max, rng)
    if move == "seasonal_move":
        return propose_seasonal_move(structure, n, min_seg, rng)
    if move == "seasonal_exchange":
        return propose_seasonal_exchange(structure, n, min_seg, hyper.l_order_max, rng)
    if move == "order_change":
        return propose_order_change(structure, hyper.l_order_max, rng)
    raise ValueError(f"unknown move {move!r}")


def rjmcmc_step(state: ChainState, y: np.ndarray, hyper: Hyperparams,
                rng: np.random.Generator) -> tuple[ChainState, bool]:
    """One sweep: structure move, then coefficient / variance / ridge draws.

    Returns the new state and whether the structure move was accepted;
    impossible proposals count as rejections.
    """
    n = len(y)
    min_seg = hyper.resolve_min_seg(n)
    moves = _TREND_MOVES if state.structure.season_mode == "none" \
        else _TREND_MOVES + _SEASONAL_MOVES
    move = moves[rng.integers(len(moves))]
    proposal = _propose(move, state.structure, n, hyper, min_seg, rng)

    accepted = False
    if proposal is not None:
        new_structure, log_hastings = proposal
        try:
            cand = _make_state(new_structure, y, hyper, state.nu)
        except (NumericalUnderflow, SingularSegment):
            cand = None
        if cand is not None and cand.logprior > -math.inf:
            log_alpha = (cand.logml - state.logml
                         + cand.logprior - state.logprior + log_hastings)
            if math.log(rng.random()) < log_alpha:
                state = cand
                accepted = True

    if not hyper.flat_likelihood:
        yty = float(y @ y)
        if hyper.nu_fixed is None:
            _draw_nu(state, yty, n, hyper, rng)
        _draw_coefficients(state, yty, n, hyper, rng)
    return state, accepted


def _nu_log_target(logml: float, nu: float, hyper: Hyperparams) -> float:
    # gamma prior plus the log-scale Jacobian folds (shape-1)+1 into shape
    return logml + hyper.nu_shape * math.log(nu) - hyper.nu_rate * nu


def _draw_nu(state: ChainState, yty: float, n: int, hyper: Hyperparams,
             rng: np.random.Generator) -> None:
    """Metropolis step for the shrinkage scale on its log scale.

    The target marginalizes the coefficients out (conjugate evidence times
    the gamma prior). Conditioning on beta instead lets noise-only fits
    chase nu without bound, which silently removes the complexity penalty
    and lets knot counts drift back to the prior.
    """
    p = state.x.shape[1]
    prop = state.nu * math.exp(0.6 * rng.standard_normal())
    try:
        logml_p = _evidence_scalar(state.fit_q, yty, p, n, hyper, prop)
    except NumericalUnderflow:
        return
    log_r = (_nu_log_target(logml_p, prop, hyper)
             - _nu_log_target(state.logml, state.nu, hyper))
    if math.log(rng.random()) < log_r:
        state.nu = prop
        state.logml = logml_p


def _draw_coefficients(state: ChainState, yty: float, n: int,
                       hyper: Hyperparams, rng: np.random.Generator) -> None:
    """Joint draw of (sigma2, beta) from their exact conditional given nu."""
    p = state.x.shape[1]
    w = state.nu / (1.0 + state.nu)
    a_n = hyper.sigma2_shape + 0.5 * n
    b_n = hyper.sigma2_scale + 0.5 * (yty - w * state.fit_q)
    state.sigma2 = float(b_n / rng.gamma(a_n))
    z = rng.standard_normal(p)
    state.beta = w * state.beta_hat + math.sqrt(state.sigma2 * w) * np.linalg.solve(
        state.chol.T, z)


def sample_coefficients(y: np.ndarray, structure: ModelStructure,
                        hyper: Hyperparams, sweeps: int, seed: int = 0) -> dict:
    """Gibbs draws with the structure pinned (no trans-dimensional moves).

    With hyper.nu_fixed set this is conjugate Bayesian linear regression,
    so the draw moments can be checked against the closed-form posterior.
    """
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    nu = hyper.nu_fixed if hyper.nu_fixed is not None else 1.0
    state = _make_state(structure, y, hyper, nu)
    n, p = state.x.shape
    yty = float(y @ y)
    betas = np.empty((sweeps, p))
    sigma2s = np.empty(sweeps)
    nus = np.empty(sweeps)
    for i in range(sweeps):
        if hyper.nu_fixed is None:
            _draw_nu(state, yty, n, hyper, rng)
        _draw_coefficients(state, yty, n, hyper, rng)
        betas[i] = state.beta
        sigma2s[i] = state.sigma2
        nus[i] = state.nu
    w = state.nu / (1.0 + state.nu)
    return {"beta": betas, "sigma2": sigma2s, "nu": nus,
            "posterior_mean": w * state.beta_hat}


def _random_structure(n: int, hyper: Hyperparams, min_seg: int,
                      rng: np.random.Generator) -> ModelStructure:
    """Mid-complexity start: about cp_max/2 knots, random admissible layout."""
    def grow(target):
        knots: tuple[int, ...] = ()
        for _ in range(target):
            free = admissible_positions(knots, n, min_seg)
            if len(free) == 0:
                break
            knots = tuple(sorted(knots + (int(free[rng.integers(len(free))]),)))
        return knots
    target = max(1, hyper.cp_max // 2)
    trend = grow(target)
    if hyper.season_mode == "none":
        return ModelStructure(trend, (), (), hyper.period, "none")
    seasonal = grow(target)
    orders = tuple(int(rng.integers(1, hyper.l_order_max + 1))
                   for _ in range(len(seasonal) + 1))
    return ModelStructure(trend, seasonal, orders, hyper.period, "harmonic")


def _split_chain_psrf(traces: list[np.ndarray]) -> float:
    """Potential scale reduction with each chain split in half."""
    halves = []
    for tr in traces:
        mid = len(tr) // 2
        if mid >= 2:
            halves.extend([tr[:mid], tr[mid: 2 * mid]])
    if len(halves) < 2:
        return 1.0
    t = min(len(h) for h in halves)
    seq = np.stack([h[:t] for h in halves])
    within = seq.var(axis=1, ddof=1).mean()
    if within == 0:
        return 1.0
    between = t * seq.mean(axis=1).var(ddof=1)
    var_hat = (t - 1) / t * within + between / t
    return float(np.sqrt(var_hat / within))


def _slope_signs(structure: ModelStructure, beta: np.ndarray, n: int,
                 eps_slope: float) -> np.ndarray:
    """Per-time slope category for one sample: +1, 0, -1.

    Slopes are per-axis units of the standardized series; |b| below
    eps_slope counts as flat.
    """
    out = np.empty(n, dtype=np.int8)
    for j, (lo, hi) in enumerate(segment_bounds(structure.trend_knots, n)):
        b = beta[2 * j + 1]
        out[lo:hi] = 0 if abs(b) < eps_slope else (1 if b > 0 else -1)
    return out


def run_sampler(series, hyper: Hyperparams | None = None) -> PosteriorSummary:
    """Posterior decomposition of one series under structure averaging.

    Chain 0 starts empty, the others at random mid-complexity layouts; all
    post-burn-in sweeps pool into streaming summaries. The series is
    standardized internally and every output is mapped back to its scale.
    """
    if hyper is None:
        hyper = Hyperparams()
    values = np.asarray(series.values, dtype=float)
    dates = tuple(series.dates)
    n = len(values)
    min_seg = hyper.resolve_min_seg(n)
    if n < 4 * min_seg:
        raise TooShort(f"need >= {4 * min_seg} points, got {n}")
    sd = float(values.std())
    if sd == 0:
        raise ZeroVariance(f"{series.id}: constant series")
    mean = float(values.mean())
    y = (values - mean) / sd

    cp_max = hyper.cp_max
    retained_per_chain = hyper.samples - hyper.burn_in
    total_retained = hyper.chains * retained_per_chain
    thin = max(1, math.ceil(total_retained / 2000))

    trend_cp = np.zeros(n)
    trend_cp_window = np.zeros(n)
    w_half = max(1, min_seg // 2)
    win_lo = np.clip(np.arange(n) - w_half - 1, -1, n - 1)
    win_hi = np.clip(np.arange(n) + w_half, 0, n - 1)
    seasonal_cp = np.zeros(n)
    ncp_trend = np.zeros(cp_max + 1)
    ncp_seasonal = np.zeros(cp_max + 1)
    ncp_total = np.zeros(2 * cp_max + 1)
    slope_counts = np.zeros((n, 3))  # columns: pos, zero, neg
    trend_sum = np.zeros(n)
    seasonal_sum = np.zeros(n)
    order_sum = np.zeros(n)
    jump_sum = np.zeros(n)
    jump_cnt = np.zeros(n)
    trend_buf: list[np.ndarray] = []
    seasonal_buf: list[np.ndarray] = []
    traces: list[np.ndarray] = []
    accept_counts = 0
    sample_index = 0

    for chain in range(hyper.chains):
        rng = np.random.default_rng([hyper.seed, chain])
        if chain == 0:
            structure = ModelStructure((), (), (1,) if hyper.season_mode == "harmonic" else (),
                                       hyper.period, hyper.season_mode)
        else:
            structure = _random_structure(n, hyper, min_seg, rng)
        nu0 = hyper.nu_fixed if hyper.nu_fixed is not None else 1.0
        state = _make_state(structure, y, hyper, nu0)
        trace = np.empty(retained_per_chain)
        for sweep in range(hyper.samples):
            state, accepted = rjmcmc_step(state, y, hyper, rng)
            if sweep < hyper.burn_in:
                continue
            accept_counts += accepted
            trace[sweep - hyper.burn_in] = state.logml

            st = state.structure
            m = len(st.trend_knots)
            p_sea = len(st.seasonal_knots)
            if m:
                mark = np.zeros(n)
                for tau in st.trend_knots:
                    trend_cp[tau] += 1
                    mark[tau] = 1.0
                cs = np.cumsum(mark)
                in_win = cs[win_hi] - np.where(win_lo < 0, 0.0, cs[win_lo])
                trend_cp_window += in_win > 0
            for xi in st.seasonal_knots:
                seasonal_cp[xi] += 1
            ncp_trend[m] += 1
            ncp_seasonal[p_sea] += 1
            ncp_total[m + p_sea] += 1

            n_trend_cols = 2 * (m + 1)
            trend_curve = state.x[:, :n_trend_cols] @ state.beta[:n_trend_cols]
            trend_sum += trend_curve
            signs = _slope_signs(st, state.beta, n, hyper.eps_slope)
            slope_counts[signs > 0, 0] += 1
            slope_counts[signs == 0, 1] += 1
            slope_counts[signs < 0, 2] += 1
            for tau in st.trend_knots:
                jump_sum[tau] += trend_curve[tau + 1] - trend_curve[tau - 1]
                jump_cnt[tau] += 1
            if hyper.season_mode == "harmonic":
                seasonal_curve = state.x[:, n_trend_cols:] @ state.beta[n_trend_cols:]
                seasonal_sum += seasonal_curve
                for (lo, hi), order in zip(segment_bounds(st.seasonal_knots, n),
                                           st.harmonic_orders):
                    order_sum[lo:hi] += order
            else:
                seasonal_curve = np.zeros(n)
            if sample_index % thin == 0:
                trend_buf.append(trend_curve.copy())
                seasonal_buf.append(seasonal_curve.copy())
            sample_index += 1
        traces.append(trace)

    total = float(total_retained)
    psrf = _split_chain_psrf(traces)
    not_converged = psrf > 1.2
    if not_converged:
        warnings.warn(f"split-chain scale reduction {psrf:.3f} > 1.2; "
                      "chains disagree on evidence", NotConvergedWarning)

    trend_stack = np.stack(trend_buf) * sd + mean
    seasonal_stack = np.stack(seasonal_buf) * sd
    fitted_trend = {
        "mean": trend_sum / total * sd + mean,
        "lower": np.quantile(trend_stack, 0.025, axis=0),
        "upper": np.quantile(trend_stack, 0.975, axis=0),
    }
    fitted_seasonal = {
        "mean": seasonal_sum / total * sd,
        "lower": np.quantile(seasonal_stack, 0.025, axis=0),
        "upper": np.quantile(seasonal_stack, 0.975, axis=0),
    }

    trend_cp_prob = trend_cp / total
    trend_cp_window_prob = trend_cp_window / total
    ncp_trend_dist = ncp_trend / total
    cum = np.cumsum(ncp_total[::-1])[::-1] / total  # Pr(total >= k)

    cps, jumps = extract_changepoints(
        trend_cp_prob, ncp_trend_dist, jump_sum * sd, jump_cnt, dates,
        min_seg, hyper.cp_prob_min)

    return PosteriorSummary(
        series_id=series.id,
        dates=dates,
        values=values,
        trend_cp_prob=trend_cp_prob,
        trend_cp_window_prob=trend_cp_window_prob,
        seasonal_cp_prob=seasonal_cp / total,
        ncp_trend_dist=ncp_trend_dist,
        ncp_seasonal_dist=ncp_seasonal / total,
        cumulative_ncp_dist=cum,
        slope_sign=slope_counts / total,
        fitted_trend=fitted_trend,
        fitted_seasonal=fitted_seasonal,
        mean_seasonal_order=order_sum / total,
        extracted_cps=cps,
        jumps=jumps,
        diagnostics={
            "psrf_logml": psrf,
            "not_converged": bool(not_converged),
            "acceptance_rate": accept_counts / total,
            "retained_samples": int(total_retained),
            "thin": thin,
            "chains": hyper.chains,
            "seed": hyper.seed,
        },
    )
