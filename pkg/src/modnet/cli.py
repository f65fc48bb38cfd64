"""Command-line interface: ``modnet <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .core import DataError, MnmModel, RawData, as_moderators, dumps, read_csv, write_csv
from .estimator import EstimationError, NodewiseFit, fit_mnm_full, fit_sequential, format_interaction
from .factorgraph import export_dot, export_json, to_factor_graph, to_nodewise_factor_graph
from .harness import (
    ESTIMATORS,
    N_GRID,
    SimConfig,
    median_split_baseline,
    run_isolated_types,
    run_neighbors_experiment,
    run_simulation,
    summary_tables,
    write_results_csv,
)
from .sampler import SamplerAbort, SamplerConfig, gibbs_sample
from .simgen import isolated_types_model, random_mnm, uncorrelated_neighbors_ggm
from .solver import EbicConfig, LassoFit, PathConfig, SolverError

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MODNET_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"MODNET_SEED is not an integer: {env!r}") from None


def _parse_moderators(text: str, p: int):
    text = text.strip().lower()
    if text in ("none", "all"):
        return as_moderators(text, p)
    try:
        idx = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad moderator list {text!r}") from None
    bad = [i for i in idx if not 1 <= i <= p]
    if bad:
        raise UsageError(f"moderator index out of range 1..{p}: {bad[0]}")
    return as_moderators(idx, p)


def _load_model(path) -> MnmModel:
    try:
        return MnmModel.from_json(Path(path).read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"{path}: cannot read model ({exc})") from exc


def _write(path, text: str) -> None:
    Path(path).write_text(text)


def _nodewise_meta(fits) -> list:
    return [{"node": f.node, "terms": [list(t) for t in f.term_ids],
             "coefficients": [float(c) for c in f.selected.coefficients],
             "lambda": f.selected.lambda_} for f in fits]


def _fits_from_meta(entries) -> list:
    import numpy as np

    out = []
    for e in entries:
        coef = np.asarray(e["coefficients"], dtype=float)
        sel = LassoFit(float(e.get("lambda", 0.0)), coef, 0.0, 0.0, int(np.count_nonzero(coef)), 0, True, coef)
        out.append(NodewiseFit(int(e["node"]), sel, tuple(tuple(t) for t in e["terms"]), ()))
    return out


# ---------------------------------------------------------------- commands


def cmd_fit(args) -> int:
    raw = read_csv(args.data, header=not args.no_header)
    mods = _parse_moderators(args.moderators, raw.p)
    ebic_cfg = EbicConfig(args.gamma)
    seed = _seed(args)
    if args.sequential:
        combined = fit_sequential(raw, args.rule, PathConfig(), ebic_cfg)
        model = combined.union_model
        meta = {"rule": args.rule.upper(), "gamma": args.gamma, "moderators": "sequential", "seed": seed}
    else:
        res = fit_mnm_full(raw, mods, args.rule, PathConfig(), ebic_cfg, jobs=args.jobs)
        model = res.model
        meta = {"rule": args.rule.upper(), "gamma": args.gamma, "moderators": list(mods.members), "seed": seed,
                "nodewise": _nodewise_meta(res.fits)}
    model = MnmModel(model.p, model.alpha, model.beta, model.omega, model.sigma, raw.column_names, meta)
    _write(args.out, model.to_json())
    pw = model.nonzero_beta()
    tw = model.nonzero_omega()
    print(f"Pairwise interactions: {len(pw)}")
    for i, j in pw:
        print(f"  {i} {j}")
    print(f"3-way interactions: {len(tw)}")
    for i, j, q in tw:
        print(f"  {i} {j} {q}")
    return 0


def cmd_gen_model(args) -> int:
    seed = _seed(args)
    kind = args.kind
    if kind == "random":
        d = random_mnm(seed).to_dict()
    elif kind == "isolated":
        d = isolated_types_model().to_dict()
    elif kind.startswith("neighbors-"):
        try:
            k = int(kind.split("-", 1)[1])
            d = uncorrelated_neighbors_ggm(k).to_dict()
        except ValueError as exc:
            raise UsageError(f"bad model kind {kind!r}: {exc}") from None
    else:
        raise UsageError(f"unknown model kind {kind!r}")
    _write(args.out, dumps(d))
    return 0


def cmd_sample(args) -> int:
    model = _load_model(args.model)
    cfg = SamplerConfig(args.tau, args.burnin, args.max_attempts, _seed(args))
    batch = gibbs_sample(model, args.n, cfg)
    write_csv(args.out, batch.data, list(model.column_names))
    meta_path = args.meta or str(Path(args.out).with_suffix("")) + ".meta.json"
    _write(meta_path, dumps(batch.metadata(cfg)))
    print(f"wrote {args.n} cases, rejection rate {batch.rejection_rate:.3f}")
    return 0


def _parse_grid(text):
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"bad n grid {text!r}") from None


def cmd_simulate(args) -> int:
    ests = tuple(e.strip().upper() for e in args.estimators.split(","))
    bad = [e for e in ests if e not in ESTIMATORS]
    if bad:
        raise UsageError(f"unknown estimator {bad[0]!r}; choose from {', '.join(ESTIMATORS)}")
    try:
        cfg = SimConfig(_parse_grid(args.n_grid), args.reps, ests, _seed(args),
                        sampler=SamplerConfig(args.tau, args.burnin), screen=not args.no_screen, jobs=args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.experiment == "main":
        run = run_simulation(cfg)
        text = summary_tables(run)
    elif args.experiment == "isolated":
        run = run_isolated_types(cfg)
        text = summary_tables(run)
    else:
        curves, run = run_neighbors_experiment(cfg)
        header = "k   " + "".join(f"{n:>6}" for n in cfg.n_grid)
        rows = [f"{k:<4}" + "".join(f"{curves[k][n]:>6.2f}" for n in cfg.n_grid) for k in sorted(curves)]
        text = "\n".join([header] + rows)
    write_results_csv(args.out, run)
    if args.summary:
        _write(args.summary, text + "\n")
    print(text)
    if run.skipped:
        print(f"skipped replications: {len(run.skipped)}", file=sys.stderr)
    return 0


def cmd_show(args) -> int:
    model = _load_model(args.model)
    try:
        idx = [int(t) for t in args.int.split(",")]
    except ValueError:
        raise UsageError(f"bad interaction {args.int!r}") from None
    try:
        print(format_interaction(model, idx))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return 0


def cmd_export_graph(args) -> int:
    model = _load_model(args.model)
    if args.nodewise:
        entries = model.meta.get("nodewise")
        if not entries:
            raise DataError(f"{args.model}: no nodewise estimates stored (refit with 'modnet fit')")
        graph = to_nodewise_factor_graph(_fits_from_meta(entries), model.column_names, args.pairwise_as_edge)
    else:
        graph = to_factor_graph(model, args.pairwise_as_edge)
    fmt = args.format or ("json" if str(args.out).endswith(".json") else "dot")
    _write(args.out, export_json(graph) if fmt == "json" else export_dot(graph))
    return 0


def cmd_baseline(args) -> int:
    raw = read_csv(args.data, header=not args.no_header)
    if not 1 <= args.moderator <= raw.p:
        raise UsageError(f"moderator index out of range 1..{raw.p}")
    try:
        split = median_split_baseline(raw, args.moderator, args.rule, PathConfig(), EbicConfig(args.gamma))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _write(args.out, dumps(split.to_dict()))
    print(f"flagged edges: {len(split.flagged_edges)}")
    for i, j, d in split.flagged_edges:
        print(f"  {i} {j} {'+' if d > 0 else '-'}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="modnet", description="Moderated network models")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seed_arg(p):
        p.add_argument("--seed", type=int, default=None, help="random seed (fallback: $MODNET_SEED, then 0)")

    p = sub.add_parser("fit", help="estimate a model from CSV data")
    p.add_argument("--data", required=True)
    p.add_argument("--no-header", action="store_true", help="CSV has no header row")
    p.add_argument("--moderators", default="none", help="none, all, or comma-separated 1-based indices")
    p.add_argument("--rule", choices=("and", "or"), default="and")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.add_argument("--sequential", action="store_true", help="one model per moderator, combined by union")
    p.add_argument("--jobs", type=int, default=-1, help="worker processes (default: all cores)")
    seed_arg(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("gen-model", help="write a data-generating model")
    p.add_argument("--kind", default="random", help="random, isolated or neighbors-K (K in 1..4)")
    p.add_argument("--out", required=True)
    seed_arg(p)
    p.set_defaults(func=cmd_gen_model)

    p = sub.add_parser("sample", help="draw cases with the Gibbs rejection sampler")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float, default=3.09)
    p.add_argument("--burnin", type=int, default=100)
    p.add_argument("--max-attempts", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.add_argument("--meta", default=None, help="metadata path (default: <out>.meta.json)")
    seed_arg(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("simulate", help="run a simulation study")
    p.add_argument("--experiment", choices=("main", "isolated", "neighbors"), default="main")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--estimators", default="mnm1,mnm2,mnm3,split")
    p.add_argument("--n-grid", default=",".join(str(n) for n in N_GRID))
    p.add_argument("--tau", type=float, default=3.09)
    p.add_argument("--burnin", type=int, default=100)
    p.add_argument("--no-screen", action="store_true", help="skip rejection-rate screening of models")
    p.add_argument("--jobs", type=int, default=-1, help="worker processes (default: all cores)")
    p.add_argument("--out", required=True, help="records CSV")
    p.add_argument("--summary", default=None, help="summary table path")
    seed_arg(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("show", help="print weight and sign of one interaction")
    p.add_argument("--model", required=True)
    p.add_argument("--int", required=True, help="e.g. 2,5 or 3,4,5")
    p.set_defaults(func=cmd_show)

    p = sub.add_parser("export-graph", help="write the factor graph as DOT or JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("dot", "json"), default=None)
    p.add_argument("--nodewise", action="store_true")
    p.add_argument("--pairwise-as-edge", action="store_true")
    p.set_defaults(func=cmd_export_graph)

    p = sub.add_parser("baseline", help="median-split GGM comparison")
    p.add_argument("--data", required=True)
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--moderator", type=int, required=True)
    p.add_argument("--rule", choices=("and", "or"), default="and")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"modnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"modnet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SamplerAbort, SolverError, EstimationError) as exc:
        print(f"modnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
