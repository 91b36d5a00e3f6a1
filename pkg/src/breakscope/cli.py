"""Command-line interface.

Subcommands: synth (seeded generators to CSV), hurst (rolling or whole-series
efficiency estimates), mi (pairwise dependence curves), pmime (directed
coupling matrix and network), beast (trend/season decomposition with
changepoint probabilities), report (all of the above plus event
classification in one document).

Exit codes: 0 success, 1 any package error, 2 vacuous report (no section
could run) or bad usage.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import report as rep
from .beast import Hyperparams, run_sampler
from .errors import BreakscopeError, PartialFailure
from .events import classify_breakpoints, default_catalog, load_catalog
from .hurst import ghe, hurst_rs, rolling_ghe
from .infotheory import mi_decoupling, rolling_mi
from .pmime import causality_network, network_edge_rows, pmime
from .series import (
    Panel,
    RollingSeries,
    RollingWindowSpec,
    drop_negative_prices,
    load_csv,
    log_returns,
    log_transform,
    rolling_apply,
)
from .synth import GeneratorSpec, generate

TRANSFORMS = ("raw", "log", "log_return")


def _comma_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",")) if text else ()


def _comma_ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",")) if text else ()


def _parse_matrix(text: str) -> list[list[float]]:
    return [[float(c) for c in row.split(",")] for row in text.split(";")]


def load_panel(args) -> Panel:
    """Read --input and apply the shared preprocessing flags."""
    if not args.input:
        raise BreakscopeError("this subcommand requires --input")
    schema = None
    if args.columns:
        schema = {c: c for c in args.columns.split(",")}
    panel = load_csv(args.input, schema)
    out = []
    for s in panel.series:
        if args.drop_negative:
            s = drop_negative_prices(s)
        if args.transform == "log":
            s = log_transform(s)
        elif args.transform == "log_return":
            s = log_returns(s)
        out.append(s)
    return Panel.align(out, dict(panel.meta))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="date-indexed CSV panel")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out-dir", default=".", help="directory for outputs")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="primary tabular output format")
    common.add_argument("--columns", help="comma-separated subset of CSV columns")
    common.add_argument("--drop-negative", action="store_true",
                        help="drop non-positive prices before transforming")
    common.add_argument("--transform", choices=TRANSFORMS, default="raw")

    p = argparse.ArgumentParser(prog="breakscope",
                                description="time-series breakpoint, efficiency "
                                            "and causality toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", parents=[common],
                        help="write a seeded synthetic panel to CSV")
    sp.add_argument("--kind", required=True,
                    choices=("fgn", "fbm", "white_noise", "var_coupled",
                             "piecewise_trend_seasonal"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--out", help="output CSV path (default under --out-dir)")
    sp.add_argument("--h", type=float, default=0.5)
    sp.add_argument("--sd", type=float, default=1.0)
    sp.add_argument("--adjacency",
                    help="coupling rows, e.g. '0,0;0.9,0' for x1 driving x2")
    sp.add_argument("--noise-sd", type=float, default=0.0)
    sp.add_argument("--knots", default="", help="comma-separated trend knots")
    sp.add_argument("--levels", default="0", help="per-segment starting levels")
    sp.add_argument("--slopes", default="0", help="per-segment slopes")
    sp.add_argument("--amplitude", type=float, default=0.0)
    sp.add_argument("--period", type=float, default=7.0)
    sp.set_defaults(func=cmd_synth)

    hp = sub.add_parser("hurst", parents=[common],
                        help="rolling or whole-series Hurst estimates")
    hp.add_argument("--window", type=int, default=75,
                    help="observations per window; 0 = whole series")
    hp.add_argument("--step", type=int, default=1)
    hp.add_argument("--q", type=float, default=1.0)
    hp.add_argument("--method", choices=("ghe", "rs"), default="ghe")
    hp.add_argument("--per-year", action="store_true",
                    help="also emit annual means of the rolling estimate")
    hp.add_argument("--corr-matrix", action="store_true",
                    help="also emit the correlation matrix of the rolling curves")
    hp.set_defaults(func=cmd_hurst)

    mp = sub.add_parser("mi", parents=[common],
                        help="rolling mutual information between series pairs")
    mp.add_argument("--pair", action="append", required=True,
                    help="two column ids, e.g. --pair TTF,USD_RUB (repeatable)")
    mp.add_argument("--window", type=int, default=60)
    mp.add_argument("--step", type=int, default=1)
    mp.add_argument("--estimator", choices=("knn", "binned"), default="knn")
    mp.add_argument("--k", type=int, default=4)
    mp.add_argument("--bins", type=int)
    mp.add_argument("--decouple-against",
                    help="second pair whose MI curve is compared with the first")
    mp.add_argument("--gap-threshold", type=float, default=0.1)
    mp.add_argument("--run-len", type=int, default=5)
    mp.set_defaults(func=cmd_mi)

    pp = sub.add_parser("pmime", parents=[common],
                        help="directed coupling matrix from mixed embeddings")
    pp.add_argument("--lmax", type=int, default=5)
    pp.add_argument("--k", type=int, default=4)
    pp.add_argument("--stop", choices=("surrogate", "ratio"), default="surrogate")
    pp.add_argument("--alpha", type=float, default=0.05)
    pp.add_argument("--ratio", type=float, default=0.97)
    pp.add_argument("--surrogates", type=int, default=100)
    pp.add_argument("--threshold", type=float, default=0.0,
                    help="minimum entry for a network edge")
    pp.set_defaults(func=cmd_pmime)

    bp = sub.add_parser("beast", parents=[common],
                        help="trend/season decomposition with changepoint probabilities")
    bp.add_argument("--period", type=float, default=7.0)
    bp.add_argument("--season", choices=("harmonic", "none"), default="harmonic")
    bp.add_argument("--cp-max", type=int, default=20)
    bp.add_argument("--min-seg", type=int,
                    help="minimum segment length (default scales with n)")
    bp.add_argument("--samples", type=int, default=10000)
    bp.add_argument("--burn-in", type=int, default=2000)
    bp.add_argument("--chains", type=int, default=3)
    bp.set_defaults(func=cmd_beast)

    rp = sub.add_parser("report", parents=[common],
                        help="run selected sections and bundle one report")
    rp.add_argument("--sections", default=",".join(rep.REPORT_SECTIONS),
                    help="comma-separated subset of "
                         + ",".join(rep.REPORT_SECTIONS))
    rp.add_argument("--catalog", help="event catalog JSON (default bundled)")
    rp.add_argument("--tol-days", type=int, default=3)
    rp.add_argument("--max-match-days", type=int, default=30)
    rp.add_argument("--window", type=int, default=75, help="hurst window")
    rp.add_argument("--step", type=int, default=1, help="hurst window step")
    rp.add_argument("--q", type=float, default=1.0)
    rp.add_argument("--method", choices=("ghe", "rs"), default="ghe")
    rp.add_argument("--mi-window", type=int, default=60)
    rp.add_argument("--mi-step", type=int, default=1)
    rp.add_argument("--k", type=int, default=4)
    rp.add_argument("--pair", action="append",
                    help="mi pairs (default: every unordered pair)")
    rp.add_argument("--lmax", type=int, default=5)
    rp.add_argument("--stop", choices=("surrogate", "ratio"), default="surrogate")
    rp.add_argument("--alpha", type=float, default=0.05)
    rp.add_argument("--ratio", type=float, default=0.97)
    rp.add_argument("--surrogates", type=int, default=100)
    rp.add_argument("--period", type=float, default=7.0)
    rp.add_argument("--season", choices=("harmonic", "none"), default="harmonic")
    rp.add_argument("--cp-max", type=int, default=20)
    rp.add_argument("--min-seg", type=int)
    rp.add_argument("--samples", type=int, default=10000)
    rp.add_argument("--burn-in", type=int, default=2000)
    rp.add_argument("--chains", type=int, default=3)
    rp.set_defaults(func=cmd_report)
    return p


# --- subcommand bodies -------------------------------------------------------

def cmd_synth(args) -> int:
    params = {}
    if args.kind in ("fgn", "fbm"):
        params["h"] = args.h
    elif args.kind == "white_noise":
        params["sd"] = args.sd
    elif args.kind == "var_coupled":
        if not args.adjacency:
            raise BreakscopeError("var_coupled needs --adjacency")
        params["adjacency"] = _parse_matrix(args.adjacency)
        params["noise_sd"] = args.noise_sd or 1.0
    else:
        params.update(
            knots=_comma_ints(args.knots),
            levels=_comma_floats(args.levels),
            slopes=_comma_floats(args.slopes),
            amplitude=args.amplitude,
            period=args.period,
            noise_sd=args.noise_sd,
        )
    panel = generate(GeneratorSpec(args.kind, args.n, args.seed, params))
    out = args.out or os.path.join(args.out_dir, f"synth_{args.kind}.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    header, rows = rep.panel_rows(panel)
    rep.write_csv(out, header, rows)
    return 0


def _whole_series_hurst(panel: Panel, args) -> list[dict]:
    out = []
    for s in panel.series:
        est = ghe(s.values, args.q) if args.method == "ghe" else hurst_rs(s.values)
        out.append({"series": s.id, "method": est.method, "q": est.q,
                    "h": est.h, "fit_r2": est.fit_r2, "n_scales": est.n_scales,
                    "clamped": est.clamped})
    return out


def _rolling_hurst(panel: Panel, args) -> list[RollingSeries]:
    spec = RollingWindowSpec(args.window, args.step)
    curves = []
    for s in panel.series:
        if args.method == "ghe":
            curves.append(rolling_ghe(s, spec, q=args.q))
        else:
            curves.append(rolling_apply(s, spec, lambda w: hurst_rs(w).h,
                                        statistic="rs_h"))
    return curves


def _annual_means(curves: list[RollingSeries]) -> list[list]:
    rows = []
    for c in curves:
        by_year: dict[int, list[float]] = {}
        for d, v in c.points:
            by_year.setdefault(d.year, []).append(v)
        for year in sorted(by_year):
            vals = by_year[year]
            rows.append([c.source_id, year, float(np.mean(vals)), len(vals)])
    return rows


def _curve_correlation(curves: list[RollingSeries]) -> tuple[np.ndarray, list[str]]:
    from .series import pearson_correlation_matrix
    if len(curves) < 2:
        raise BreakscopeError("--corr-matrix needs at least two series")
    common = set(curves[0].dates)
    for c in curves[1:]:
        common &= set(c.dates)
    axis = sorted(common)
    if len(axis) < 3:
        raise BreakscopeError("rolling curves share fewer than 3 dates")
    rows = []
    for c in curves:
        lut = dict(c.points)
        rows.append([lut[d] for d in axis])
    ids = [c.source_id for c in curves]
    return pearson_correlation_matrix(rows, ids), ids


def _hurst_outputs(panel: Panel, args):
    """Shared by the hurst subcommand and the report section."""
    doc: dict = {"method": args.method, "q": args.q, "window": args.window}
    tables: dict = {}
    if args.window == 0:
        estimates = _whole_series_hurst(panel, args)
        doc["estimates"] = estimates
        tables["hurst_summary.csv"] = (
            ["series", "method", "q", "h", "fit_r2", "n_scales", "clamped"],
            [[e["series"], e["method"], e["q"], e["h"], e["fit_r2"],
              e["n_scales"], e["clamped"]] for e in estimates],
            "whole-series Hurst estimates, one row per series",
        )
        return doc, tables
    curves = _rolling_hurst(panel, args)
    doc["curves"] = [rep.rolling_to_dict(c) for c in curves]
    rows = []
    for c in curves:
        rows.extend(rep.rolling_rows(c))
    tables["hurst_rolling.csv"] = (
        ["series", "date", "statistic", "value"], rows,
        "per-window Hurst exponents, long format",
    )
    if getattr(args, "per_year", False):
        annual = _annual_means(curves)
        doc["annual_means"] = [
            {"series": r[0], "year": r[1], "mean_h": r[2], "n_windows": r[3]}
            for r in annual]
        tables["hurst_annual.csv"] = (
            ["series", "year", "mean_h", "n_windows"], annual,
            "calendar-year means of the rolling Hurst exponent",
        )
    if getattr(args, "corr_matrix", False):
        mat, ids = _curve_correlation(curves)
        doc["curve_correlation"] = {"ids": ids, "matrix": mat}
        tables["hurst_corr.csv"] = (
            ["a", "b", "correlation"], rep.matrix_rows(mat, ids),
            "correlation between per-series rolling Hurst curves",
        )
    return doc, tables


def cmd_hurst(args) -> int:
    panel = load_panel(args)
    doc, tables = _hurst_outputs(panel, args)
    os.makedirs(args.out_dir, exist_ok=True)
    if args.format == "json":
        rep.write_json(os.path.join(args.out_dir, "hurst.json"), doc)
    else:
        for fname, (header, rows, _) in tables.items():
            rep.write_csv(os.path.join(args.out_dir, fname), header, rows)
    return 0


def _parse_pair(panel: Panel, text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise BreakscopeError(f"--pair needs exactly two column ids, got {text!r}")
    return panel.column(parts[0]), panel.column(parts[1])


def _mi_outputs(panel: Panel, args, pairs: list[str]):
    spec = RollingWindowSpec(args.mi_window if hasattr(args, "mi_window")
                             else args.window,
                             args.mi_step if hasattr(args, "mi_step")
                             else args.step)
    estimator = getattr(args, "estimator", "knn")
    curves = []
    for text in pairs:
        a, b = _parse_pair(panel, text)
        curves.append(rolling_mi(a, b, spec, estimator=estimator, k=args.k,
                                 bins=getattr(args, "bins", None),
                                 seed=args.seed))
    doc: dict = {"estimator": estimator, "window": spec.window_len,
                 "curves": [rep.rolling_to_dict(c) for c in curves]}
    rows = []
    for c in curves:
        rows.extend(rep.rolling_rows(c))
    tables = {"mi_rolling.csv": (
        ["pair", "date", "statistic", "value"], rows,
        "per-window mutual information for each requested pair",
    )}
    return doc, tables, curves


def cmd_mi(args) -> int:
    panel = load_panel(args)
    doc, tables, curves = _mi_outputs(panel, args, args.pair)
    if args.decouple_against:
        a, b = _parse_pair(panel, args.decouple_against)
        other = rolling_mi(a, b, RollingWindowSpec(args.window, args.step),
                           estimator=args.estimator, k=args.k, bins=args.bins,
                           seed=args.seed)
        events = mi_decoupling(curves[0], other,
                               gap_threshold=args.gap_threshold,
                               run_len=args.run_len)
        doc["decoupling"] = {
            "against": other.source_id,
            "events": [{"onset": e.onset, "peak_date": e.peak_date,
                        "peak_gap": e.peak_gap} for e in events],
        }
        tables["mi_decoupling.csv"] = (
            ["onset", "peak_date", "peak_gap"],
            [[e.onset, e.peak_date, e.peak_gap] for e in events],
            "sustained separations between the two rolling MI curves",
        )
    os.makedirs(args.out_dir, exist_ok=True)
    if args.format == "json":
        rep.write_json(os.path.join(args.out_dir, "mi.json"), doc)
    else:
        for fname, (header, rows, _) in tables.items():
            rep.write_csv(os.path.join(args.out_dir, fname), header, rows)
    return 0


def _pmime_outputs(panel: Panel, args):
    result = pmime(panel, l_max=args.lmax, stop=args.stop, k=args.k,
                   n_surrogates=args.surrogates, alpha=args.alpha,
                   ratio_threshold=args.ratio, seed=args.seed)
    doc = rep.pmime_to_dict(result)
    threshold = getattr(args, "threshold", 0.0)
    doc["network"] = causality_network(result, threshold)
    tables = {
        "pmime_matrix.csv": (
            ["source", "target", "value"],
            rep.matrix_rows(result.matrix, list(result.ids)),
            "directed coupling strength from each source to each target",
        ),
        "pmime_edges.csv": (
            ["source", "target", "weight"],
            [list(r) for r in network_edge_rows(result, threshold)],
            "network edges above the reporting threshold",
        ),
    }
    return doc, tables


def cmd_pmime(args) -> int:
    panel = load_panel(args)
    doc, tables = _pmime_outputs(panel, args)
    os.makedirs(args.out_dir, exist_ok=True)
    rep.write_json(os.path.join(args.out_dir, "pmime_network.json"),
                   doc.pop("network"))
    rep.write_json(os.path.join(args.out_dir, "pmime.json"), doc)
    header, rows, _ = tables["pmime_matrix.csv"]
    rep.write_csv(os.path.join(args.out_dir, "pmime_matrix.csv"), header, rows)
    header, rows, _ = tables["pmime_edges.csv"]
    rep.write_csv(os.path.join(args.out_dir, "pmime_edges.csv"), header, rows)
    return 0


def _beast_hyper(args) -> Hyperparams:
    return Hyperparams(
        cp_max=args.cp_max, min_seg=args.min_seg, period=args.period,
        season_mode=args.season, chains=args.chains, samples=args.samples,
        burn_in=args.burn_in, seed=args.seed,
    )


def _beast_outputs(panel: Panel, args):
    hyper = _beast_hyper(args)
    summaries = [run_sampler(s, hyper) for s in panel.series]
    doc = {"series": {s.series_id: rep.summary_to_dict(s) for s in summaries}}
    tables: dict = {}
    for s in summaries:
        stem = rep.safe_name(s.series_id)
        header, rows = rep.beast_curve_table(s)
        tables[f"beast_{stem}_curves.csv"] = (
            header, rows,
            f"per-time decomposition curves for {s.series_id}: observed value, "
            "season and trend fits with bands, changepoint probabilities, "
            "seasonal order, slope-sign probabilities, residual",
        )
        header, rows = rep.beast_ncp_table(s)
        tables[f"beast_{stem}_ncp.csv"] = (
            header, rows,
            f"posterior knot-count distributions for {s.series_id}",
        )
    tables["beast_changepoints.csv"] = (
        ["series", "date", "index", "probability", "jump"],
        rep.changepoint_rows(summaries),
        "extracted changepoints with occurrence probability and level jump",
    )
    return doc, tables, summaries


def cmd_beast(args) -> int:
    panel = load_panel(args)
    doc, tables, _ = _beast_outputs(panel, args)
    os.makedirs(args.out_dir, exist_ok=True)
    for sid, sdoc in doc["series"].items():
        rep.write_json(os.path.join(args.out_dir,
                                    f"beast_{rep.safe_name(sid)}.json"), sdoc)
    for fname, (header, rows, _) in tables.items():
        rep.write_csv(os.path.join(args.out_dir, fname), header, rows)
    return 0


def cmd_report(args) -> int:
    panel = load_panel(args)
    wanted = [s.strip() for s in args.sections.split(",") if s.strip()]
    unknown = set(wanted) - set(rep.REPORT_SECTIONS)
    if unknown:
        raise BreakscopeError(f"unknown sections: {sorted(unknown)}")

    sections: dict = {}
    errors: dict = {}
    tables: dict = {}
    summaries = []

    def attempt(name, fn):
        if name not in wanted:
            return
        try:
            fn()
        except BreakscopeError as exc:
            errors[name] = f"{type(exc).__name__}: {exc}"

    def run_hurst():
        doc, t = _hurst_outputs(panel, args)
        sections["hurst"] = doc
        tables.update(t)

    def run_mi():
        pairs = args.pair or [f"{a},{b}" for i, a in enumerate(panel.ids)
                              for b in panel.ids[i + 1:]]
        if not pairs:
            raise BreakscopeError("mi section needs at least two series")
        doc, t, _ = _mi_outputs(panel, args, pairs)
        sections["mi"] = doc
        tables.update(t)

    def run_pmime():
        doc, t = _pmime_outputs(panel, args)
        sections["pmime"] = doc
        tables.update(t)

    def run_beast():
        doc, t, ss = _beast_outputs(panel, args)
        summaries.extend(ss)
        sections["beast"] = doc
        tables.update(t)

    def run_events():
        if not summaries:
            raise BreakscopeError("events section needs beast changepoints")
        catalog = load_catalog(args.catalog) if args.catalog else default_catalog()
        cps = {s.series_id: s.extracted_cps for s in summaries}
        breakpoints = classify_breakpoints(cps, catalog, args.tol_days,
                                           args.max_match_days)
        sections["events"] = rep.breakpoint_report_to_dict(breakpoints, catalog)
        tables["events_breakpoints.csv"] = (
            ["market", "date", "probability", "event", "event_date",
             "relation", "offset_days"],
            rep.breakpoint_rows(breakpoints, catalog),
            "detected changepoints classified against the event catalog",
        )

    attempt("hurst", run_hurst)
    attempt("mi", run_mi)
    attempt("pmime", run_pmime)
    attempt("beast", run_beast)
    attempt("events", run_events)

    rep.assemble_report(sections, args.out_dir, tables, errors)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PartialFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BreakscopeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
