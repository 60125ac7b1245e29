"""Batch command-line surface.

Every run writes machine-readable CSV/JSON artifacts plus a meta.json
echoing the full configuration, so runs are reproducible from their
output directory alone.  Exit codes: 0 success, 1 runtime failure (with
a structured error JSON on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (LogisticCpOptions, logistic_cp_fit, logistic_cp_ll_estimate,
                        permutation_ll_estimate, permutation_model_from_order,
                        position_pairs, rank_correlation)
from .coresize import CoreThresholdProblem, solve_core_threshold, threshold_curve
from .hypergraph import (Hypergraph, degree_threshold_filter, degree_vector,
                         dump_edge_list, k_core_filter, largest_connected_component,
                         load_features, load_hyperedges, normalize_features,
                         project_to_graph)
from .model import (FitOptions, LayerConfig, ModelParams, PriorConfig,
                    log_likelihood, fit)
from .modelselect import (breakpoint_grid_search, degree_loglog_points,
                          elbow_select, piecewise_error_profile)
from .partition import PartitionStats, RankVector
from .rng import RngStream
from .sampler import sample_hypergraph, sample_negative_edges


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(args, out: Path, started: float, extra=None):
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in config.items()}
    meta = {
        "version": __version__,
        "command": args.command,
        "seed": getattr(args, "seed", None),
        "config": config,
        "timings": {"total_s": time.perf_counter() - started},
    }
    if extra:
        meta.update(extra)
    _write_json(out / "meta.json", meta)


def _load_graph(args) -> Hypergraph:
    return load_hyperedges(args.input, format=args.format,
                           strict=getattr(args, "strict", False))


def _parse_floats(text: str):
    return [float(v) for v in text.split(",") if v != ""]


def _parse_ints(text: str):
    return [int(v) for v in text.split(",") if v != ""]


def _read_rank_file(path, H: Hypergraph, normalize: str) -> RankVector:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0].strip() != "node":
            raise ValueError("rank file must have a 'node' header column")
        for row in reader:
            if row:
                values[row[0].strip()] = float(row[1])
    missing = [H.label_of(i) for i in range(H.n) if H.label_of(i) not in values]
    if missing:
        raise ValueError(f"rank file is missing nodes: {missing[:10]}")
    raw = np.array([values[H.label_of(i)] for i in range(H.n)])
    if normalize == "log1p-minmax":
        fm = normalize_features(raw[:, None], "exogenous")
        raw = fm.values[:, 0]
    elif normalize != "none":
        raise ValueError(f"unknown rank normalization {normalize!r}")
    return RankVector.from_values(raw)


def _rank_source(args, H: Hypergraph):
    """Returns (ranks, features) with exactly one set."""
    if args.ranks == "exogenous":
        if not args.ranks_file:
            raise ValueError("exogenous mode needs --ranks-file")
        return _read_rank_file(args.ranks_file, H, args.rank_normalize), None
    if not args.features:
        raise ValueError("endogenous mode needs --features")
    fm = load_features(args.features, H)
    return None, normalize_features(fm.values, "endogenous", columns=fm.columns)


def _priors(args) -> PriorConfig:
    return PriorConfig(c_mode=args.prior_c, alpha_c=args.alpha_c,
                       lam_alpha=args.prior_lambda_alpha,
                       lam_beta=args.prior_lambda_beta)


def _fit_options(args) -> FitOptions:
    return FitOptions(step=args.step, epochs=args.epochs, seed=args.seed,
                      gamma=args.gamma)


def _write_ranks_csv(path: Path, H: Hypergraph, rv: RankVector):
    rows = [(H.label_of(int(v)), rv.r[int(v)], int(rv.pos[int(v)])) for v in range(H.n)]
    _write_csv(path, ["node", "rank", "position"], rows)


# ---------------------------------------------------------------------------
# subcommands


def cmd_preprocess(args) -> int:
    started = time.perf_counter()
    out = _outdir(args)
    H = _load_graph(args)
    trail = [{"filter": "load", "n": H.n, "m": H.m}]
    for token in (t.strip() for t in args.filters.split(",") if t.strip()):
        name, _, val = token.partition("=")
        if name == "dedup":
            pass  # loading already deduplicates
        elif name == "lcc":
            H = largest_connected_component(H)
        elif name == "degmin":
            H = degree_threshold_filter(H, int(val) if val else 4)
        elif name == "kcore":
            H = k_core_filter(H, int(val) if val else 2)
        elif name == "project":
            H = project_to_graph(H)
        else:
            raise ValueError(f"unknown filter {name!r}")
        trail.append({"filter": token, "n": H.n, "m": H.m})
    dump_edge_list(H, out / "edges.txt")
    _write_json(out / "stats.json", {
        "n": H.n, "m": H.m, "k_min": H.k_min, "k_max": H.k_max, "trail": trail})
    _write_meta(args, out, started)
    return 0


def cmd_project(args) -> int:
    started = time.perf_counter()
    out = _outdir(args)
    H = project_to_graph(_load_graph(args))
    dump_edge_list(H, out / "edges.txt")
    _write_json(out / "stats.json", {"n": H.n, "m": H.m, "k_min": 2, "k_max": 2})
    _write_meta(args, out, started)
    return 0


def cmd_sample(args) -> int:
    started = time.perf_counter()
    out = _outdir(args)
    cfg = LayerConfig(tuple(_parse_floats(args.H)))
    params = ModelParams(lam=args.lam, c=np.asarray(_parse_floats(args.c)), cfg=cfg)
    params.require_domain()
    result = sample_hypergraph(args.n, params, _parse_ints(args.k),
                               RngStream(args.seed), collect_plan=False)
    dump_edge_list(result.hypergraph, out / "edges.txt")
    _write_json(out / "sample.json", {
        "seed": args.seed,
        "params": params.to_dict(),
        "k_range": _parse_ints(args.k),
        "n": args.n,
        "m": result.hypergraph.m,
        "ranks": [float(v) for v in result.ranks.r],
        "approximate_blocks": result.approximate_blocks,
    })
    _write_meta(args, out, started)
    return 0


def cmd_fit(args) -> int:
    started = time.perf_counter()
    out = _outdir(args)
    H = _load_graph(args)
    ranks, features = _rank_source(args, H)
    priors = _priors(args)
    opt = _fit_options(args)

    selection = None
    if args.H == "auto":
        x, y, _dropped = degree_loglog_points(H)
        pwerr = piecewise_error_profile(x, y, args.lmax)
        L = elbow_select(pwerr)
        grid = breakpoint_grid_search(H, L, args.grid_step, ranks=ranks,
                                      features=features, priors=priors, opt=opt)
        cfg = LayerConfig(grid.best.H)
        selection = {"pwerr": pwerr, "L": L, "H": list(grid.best.H)}
    else:
        cfg = LayerConfig(tuple(_parse_floats(args.H)))

    res = fit(H, cfg, ranks=ranks, features=features, priors=priors, opt=opt)
    _write_json(out / "model.json", res.to_dict(label_map_ref="ranks.csv"))
    _write_ranks_csv(out / "ranks.csv", H, res.ranks)
    if selection is not None:
        _write_json(out / "selection.json", selection)
    _write_meta(args, out, started, extra={"final_ll": res.final_ll})
    return 0


def cmd_loglik(args) -> int:
    started = time.perf_counter()
    out = _outdir(args)
    H = _load_graph(args)
    with open(args.model, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    cfg = LayerConfig(tuple(spec["H"]))
    params = ModelParams(lam=spec["lambda"], c=np.asarray(spec["c"]), cfg=cfg)
    rv = _read_rank_file(args.ranks_file, H, args.rank_normalize)
    stats = PartitionStats.build(H, rv, cfg)
    ll = log_likelihood(stats, params, gamma=args.gamma)
    _write_json(out / "loglik.json", {"ll": ll, "n": H.n, "m": H.m})
    _write_meta(args, out, started)
    print(_fmt(ll))
    return 0


def cmd_core_threshold(args) -> int:
    started = time.perf_counter()
    out = _outdir(args)
    problem = CoreThresholdProblem(n=args.n, k=args.k, lam=args.lam, c_L=args.cL)
    result = solve_core_threshold(problem, tol=args.tol)
    _write_csv(out / "curve.csv", ["t", "Phi", "F", "capacityTerm"],
               threshold_curve(problem, points=args.points))
    _write_json(out / "summary.json", {
        "success": result.success,
        "t_star": result.t_star,
        "t_prime": result.t_prime,
        "phi_at_root": result.phi_at_root,
        "expected_core": result.expected_core,
        "bound_sqrt_n": result.upper_bound,
        "guarantee": result.guarantee,
        "warnings": list(result.warnings),
        "phi_at_zero": result.phi_at_zero,
        "phi_at_t_prime": result.phi_at_t_prime,
    })
    _write_meta(args, out, started)
    return 0


def cmd_select_layers(args) -> int:
    started = time.perf_counter()
    out = _outdir(args)
    H = _load_graph(args)
    ranks, features = _rank_source(args, H)
    x, y, dropped = degree_loglog_points(H)
    pwerr = piecewise_error_profile(x, y, args.lmax)
    L = elbow_select(pwerr)
    _write_csv(out / "pwerr.csv", ["l", "pwerr"],
               [(l + 1, e) for l, e in enumerate(pwerr)])
    grid = breakpoint_grid_search(H, L, args.grid_step, ranks=ranks,
                                  features=features, priors=_priors(args),
                                  opt=_fit_options(args))
    _write_csv(out / "breakpoints.csv", ["H", "ll", "aic", "bic", "lr_vs_best"],
               [(" ".join(_fmt(h) for h in cand.H), cand.ll, cand.aic, cand.bic,
                 cand.lr_vs_best) for cand in grid.table])
    _write_json(out / "selection.json", {
        "L_pw": L, "best_H": list(grid.best.H), "criterion": grid.criterion,
        "zero_degree_dropped": dropped})
    _write_meta(args, out, started)
    return 0


def cmd_compare(args) -> int:
    started = time.perf_counter()
    out = _outdir(args)
    H = _load_graph(args)
    dataset = Path(args.input).stem
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    ranks, features = _rank_source(args, H)
    mode = args.ranks
    opt = _fit_options(args)
    mbar = sum(math.comb(H.n, k) for k in range(H.k_min, H.k_max + 1)) - H.m
    bsize = max(1, min(mbar, int(round(args.neg_frac * mbar))))
    eval_batch = sample_negative_edges(H, bsize, RngStream(args.seed).child(99))

    rows = []
    orderings = {}

    if "cigam" in models:
        cfg = LayerConfig(tuple(_parse_floats(args.H)))
        res = fit(H, cfg, ranks=ranks, features=features, priors=_priors(args), opt=opt)
        rows.append(("cigam", dataset, mode, res.final_ll,
                     json.dumps(res.params.to_dict())))
        orderings["cigam"] = [int(v) for v in res.ranks.order]
    if "logistic-cp" in models:
        cp = logistic_cp_fit(H, features=features,
                             opt=LogisticCpOptions(step=args.cp_step, epochs=args.epochs,
                                                   seed=args.seed,
                                                   batch_frac=args.neg_frac))
        est = logistic_cp_ll_estimate(H, cp.scores, eval_batch)
        rows.append(("logistic-cp", dataset, mode, est["estimate"],
                     json.dumps({"z_head": cp.scores.z[:8].tolist()})))
        orderings["logistic-cp"] = [int(v) for v in np.argsort(-cp.scores.z, kind="stable")]
    degree_order = [int(v) for v in np.argsort(-degree_vector(H), kind="stable")]
    perm_order = orderings.get("cigam", degree_order) \
        if args.perm_source == "cigam" else degree_order
    if "hypernsm" in models:
        model = permutation_model_from_order(perm_order, H.n, a=args.a,
                                             mode="hypernsm", p=args.p)
        est = permutation_ll_estimate(H, model, eval_batch)
        rows.append(("hypernsm", dataset, mode, est["estimate"],
                     json.dumps({"a": args.a, "p": args.p, "xi": "1/|e|",
                                 "perm_source": args.perm_source})))
        orderings["hypernsm"] = perm_order
    if "logistic-th" in models:
        model = permutation_model_from_order(perm_order, H.n, a=args.a,
                                             mode="logistic-th", p=args.p)
        est = permutation_ll_estimate(H, model, eval_batch)
        rows.append(("logistic-th", dataset, mode, est["estimate"],
                     json.dumps({"a": args.a, "p": args.p, "xi": "1",
                                 "perm_source": args.perm_source})))
        orderings["logistic-th"] = perm_order

    _write_csv(out / "results.csv", ["model", "dataset", "mode", "LL", "params"], rows)
    spearman = {}
    names = sorted(orderings)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            spearman[f"{a}/{b}"] = rank_correlation(orderings[a], orderings[b])
            _write_csv(out / f"rank-scatter-{a}-vs-{b}.csv",
                       ["node", f"pos_{a}", f"pos_{b}"],
                       position_pairs(orderings[a], orderings[b]))
    _write_json(out / "compare.json",
                {"rows": [{"model": r[0], "dataset": r[1], "mode": r[2],
                           "LL": r[3], "params": r[4]} for r in rows],
                 "spearman": spearman})
    _write_meta(args, out, started)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sub):
    sub.add_argument("--output", "-o", required=True, help="output directory")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=1,
                     help="worker cap (computation is deterministic; recorded in meta)")


def _add_graph_input(sub):
    sub.add_argument("--input", required=True, help="input hyperedge file")
    sub.add_argument("--format", default="edge-list",
                     choices=["edge-list", "simplicial-triple"])
    sub.add_argument("--strict", action="store_true",
                     help="treat repeated nodes inside a hyperedge as an error")


def _add_rank_source(sub):
    sub.add_argument("--ranks", default="exogenous",
                     choices=["exogenous", "endogenous"])
    sub.add_argument("--ranks-file", help="CSV node,rank for exogenous mode")
    sub.add_argument("--rank-normalize", default="log1p-minmax",
                     choices=["log1p-minmax", "none"])
    sub.add_argument("--features", help="CSV node,<f1>,... for endogenous mode")


def _add_fit_options(sub):
    sub.add_argument("--step", type=float, default=1e-3)
    sub.add_argument("--epochs", type=int, default=10)
    sub.add_argument("--gamma", type=float, default=1e-10)
    sub.add_argument("--prior-c", default="none",
                     choices=["none", "exponential", "pareto"])
    sub.add_argument("--alpha-c", type=float, default=0.0)
    sub.add_argument("--prior-lambda-alpha", type=float, default=None)
    sub.add_argument("--prior-lambda-beta", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cigam",
        description="Core-periphery hypergraph modeling: preprocess, fit, "
                    "sample, score, and analyze.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("preprocess", help="load, filter, and re-emit a hypergraph")
    _add_graph_input(p)
    p.add_argument("--filters", default="dedup",
                   help="comma list of dedup,lcc,degmin=D,kcore=D,project")
    _add_common(p)
    p.set_defaults(func=cmd_preprocess)

    p = subs.add_parser("project", help="clique-project a hypergraph to a graph")
    _add_graph_input(p)
    _add_common(p)
    p.set_defaults(func=cmd_project)

    p = subs.add_parser("sample", help="draw a hypergraph from the model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", required=True, help="comma list of orders, e.g. 2,3")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c", required=True, help="comma list of density parameters")
    p.add_argument("--H", required=True, help="comma list of breakpoints ending at 1")
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = subs.add_parser("fit", help="maximum-likelihood / MAP parameter fit")
    _add_graph_input(p)
    _add_rank_source(p)
    p.add_argument("--H", default="1",
                   help="comma list of breakpoints, or 'auto' for elbow + grid search")
    p.add_argument("--lmax", type=int, default=6)
    p.add_argument("--grid-step", type=float, default=0.5)
    _add_fit_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = subs.add_parser("loglik", help="evaluate the log-likelihood of a fitted model")
    _add_graph_input(p)
    p.add_argument("--model", required=True, help="model.json from fit")
    p.add_argument("--ranks-file", required=True)
    p.add_argument("--rank-normalize", default="none",
                   choices=["log1p-minmax", "none"])
    p.add_argument("--gamma", type=float, default=1e-10)
    _add_common(p)
    p.set_defaults(func=cmd_loglik)

    p = subs.add_parser("core-threshold", help="solve the core-size threshold function")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--cL", type=float, required=True)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-10)
    _add_common(p)
    p.set_defaults(func=cmd_core_threshold)

    p = subs.add_parser("select-layers", help="elbow layer count + breakpoint grid search")
    _add_graph_input(p)
    _add_rank_source(p)
    p.add_argument("--lmax", type=int, default=6)
    p.add_argument("--grid-step", type=float, default=0.5)
    _add_fit_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_select_layers)

    p = subs.add_parser("compare", help="score baselines against the model")
    _add_graph_input(p)
    _add_rank_source(p)
    p.add_argument("--models", default="cigam,logistic-cp,hypernsm")
    p.add_argument("--H", default="1")
    p.add_argument("--neg-frac", type=float, default=0.2)
    p.add_argument("--a", type=float, default=10.0)
    p.add_argument("--p", type=float, default=20.0)
    p.add_argument("--cp-step", type=float, default=1e-6)
    p.add_argument("--perm-source", default="cigam", choices=["cigam", "degree"])
    _add_fit_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except Exception as exc:  # runtime failure -> structured error, exit 1
        payload = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
