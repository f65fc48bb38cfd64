"""Simulation protocols with their recovery metrics, plus the median-split baseline.

Estimators
----------
MNM1   moderator known: moderators = {13}
MNM2   one model per candidate moderator, combined by union
MNM3   all variables as moderators in one model
SPLIT  median split on the moderator, a GGM per half, differing edges flagged
"""
from __future__ import annotations

import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from .core import MnmModel, RawData, canonical
from .estimator import AND, fit_mnm_full, union_models
from .sampler import SamplerAbort, SamplerConfig, gibbs_sample, screen_models
from .simgen import FULL, PARTIAL, UNMODERATED, GeneratingModelInfo, isolated_types_model, random_mnm, \
    uncorrelated_neighbors_ggm
from .solver import EbicConfig, PathConfig

log = logging.getLogger(__name__)

N_GRID = (30, 43, 63, 92, 133, 193, 280, 407, 591, 858, 1245, 1808)

PW_UNMOD = "PW_UNMOD"
PW_OF_PARTIAL = "PW_OF_PARTIAL"
MOD_OF_PARTIAL = "MOD_OF_PARTIAL"
MOD_FULL = "MOD_FULL"
PARAM_TYPES = (PW_UNMOD, PW_OF_PARTIAL, MOD_OF_PARTIAL, MOD_FULL)
PAIRWISE_TYPES = (PW_UNMOD, PW_OF_PARTIAL)
THREEWAY_TYPES = (MOD_OF_PARTIAL, MOD_FULL)

ESTIMATORS = ("MNM1", "MNM2", "MNM3", "SPLIT")


class Undefined:
    """Marker for a precision that is not defined in enough replications."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "UNDEFINED"

    def __bool__(self):
        return False


UNDEFINED = Undefined()


@dataclass(frozen=True)
class SimConfig:
    n_grid: tuple = N_GRID
    replications: int = 20
    estimators: tuple = ("MNM1", "MNM2", "MNM3")
    seed: int = 0
    rule: str = AND
    gamma: float = 0.5
    path: PathConfig = PathConfig()
    sampler: SamplerConfig = SamplerConfig()
    screen: bool = True
    n_probe: int = 1000
    keep_ratio: float = 100 / 130
    check_kkt: bool = True
    jobs: int = 1

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])) or not grid:
            raise ValueError("n_grid must be strictly increasing")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        ests = tuple(e.upper() for e in self.estimators)
        bad = [e for e in ests if e not in ESTIMATORS]
        if bad:
            raise ValueError(f"unknown estimator {bad[0]}")
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "estimators", ests)

    @property
    def ebic(self) -> EbicConfig:
        return EbicConfig(self.gamma)


@dataclass(frozen=True)
class RecoveryRecord:
    replication: int
    n: int
    estimator: str
    param_type: str
    true_count: int
    recovered_count: int
    est_pairwise_total: int
    est_threeway_total: int
    true_positive_pairwise: int
    true_positive_threeway: int

    def __post_init__(self):
        if not 0 <= self.recovered_count <= self.true_count:
            raise ValueError("recovered_count must lie in 0..true_count")


@dataclass(frozen=True)
class SplitResult:
    low_model: MnmModel
    high_model: MnmModel
    flagged_edges: tuple  # (i, j, direction_sign)
    low_rows: np.ndarray = field(repr=False, default=None)
    high_rows: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "low_model": self.low_model.to_dict(),
            "high_model": self.high_model.to_dict(),
            "flagged_edges": [{"i": i, "j": j, "direction": d} for i, j, d in self.flagged_edges],
            "n_low": int(self.low_rows.size) if self.low_rows is not None else None,
            "n_high": int(self.high_rows.size) if self.high_rows is not None else None,
        }


@dataclass
class SimulationRun:
    """Records of a simulation plus diagnostics."""

    records: list
    config: object = None
    skipped: list = field(default_factory=list)
    rejection_rates: dict = field(default_factory=dict)
    max_kkt: float = 0.0
    n_fits: int = 0
    nonconverged: int = 0

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


# ---------------------------------------------------------------- truth


def true_parameter_types(info: GeneratingModelInfo) -> dict:
    """Map each true nonzero parameter key to its type label."""
    out = {}
    for (i, j), t in info.edge_types.items():
        m = info.moderator_of((i, j))
        if t == UNMODERATED:
            out[(i, j)] = PW_UNMOD
        elif t == PARTIAL:
            out[(i, j)] = PW_OF_PARTIAL
            out[canonical((i, j, m))] = MOD_OF_PARTIAL
        elif t == FULL:
            out[canonical((i, j, m))] = MOD_FULL
    return out


def moderated_edges(info: GeneratingModelInfo) -> dict:
    """``(i, j) -> (type label, sign of the moderation effect)`` for moderated edges."""
    out = {}
    for (i, j), t in info.edge_types.items():
        if t in (PARTIAL, FULL):
            w = info.model.get((i, j, info.moderator_of((i, j))))
            out[(i, j)] = (MOD_OF_PARTIAL if t == PARTIAL else MOD_FULL, int(np.sign(w)))
    return out


def score_model(est: MnmModel, truth: MnmModel, types: dict, replication: int, n: int,
                estimator: str) -> list:
    """Recovery records of an estimated model against the generating model.

    A true parameter counts as recovered when its estimate is nonzero with
    the same sign as the true value.
    """
    hits = {}
    for key, label in types.items():
        t = truth.get(key)
        e = est.get(key)
        hits[key] = e != 0.0 and np.sign(e) == np.sign(t)
    est_pw = len(est.nonzero_beta())
    est_tw = len(est.nonzero_omega())
    tp_pw = sum(1 for k, h in hits.items() if h and len(k) == 2)
    tp_tw = sum(1 for k, h in hits.items() if h and len(k) == 3)
    records = []
    for label in PARAM_TYPES:
        keys = [k for k, lab in types.items() if lab == label]
        if not keys:
            continue
        records.append(RecoveryRecord(replication, n, estimator, label, len(keys),
                                      sum(hits[k] for k in keys), est_pw, est_tw, tp_pw, tp_tw))
    return records


def score_split(split: SplitResult, info: GeneratingModelInfo, replication: int, n: int) -> list:
    truth = moderated_edges(info)
    flagged = {(i, j): d for i, j, d in split.flagged_edges}
    hits = {e: flagged.get(e, 0) == sign for e, (_, sign) in truth.items()}
    tp = sum(hits.values())
    records = []
    for label in THREEWAY_TYPES:
        edges = [e for e, (lab, _) in truth.items() if lab == label]
        if edges:
            records.append(RecoveryRecord(replication, n, "SPLIT", label, len(edges),
                                          sum(hits[e] for e in edges), 0, len(flagged), 0, tp))
    return records


# ---------------------------------------------------------------- metrics


def _select(records, estimator, n, param_type=None):
    recs = records.records if isinstance(records, SimulationRun) else records
    return [r for r in recs if r.estimator == estimator and r.n == n
            and (param_type is None or r.param_type == param_type)]


def sensitivity(records, estimator: str, param_type: str, n: int) -> float:
    """Recovered over true parameters, pooled across replications."""
    rs = _select(records, estimator, n, param_type)
    if not rs:
        raise ValueError(f"no records for {estimator}, {param_type}, n={n}")
    return sum(r.recovered_count for r in rs) / sum(r.true_count for r in rs)


def precision(records, estimator: str, cls: str, n: int, min_defined: int = 5):
    """Mean per-replication precision for ``cls`` in {"pairwise", "threeway"}.

    Replications without any estimated parameter of the class do not count;
    with fewer than ``min_defined`` defined replications the result is
    UNDEFINED.
    """
    if cls not in ("pairwise", "threeway"):
        raise ValueError("class must be 'pairwise' or 'threeway'")
    per_rep = {}
    for r in _select(records, estimator, n):
        total = r.est_pairwise_total if cls == "pairwise" else r.est_threeway_total
        tp = r.true_positive_pairwise if cls == "pairwise" else r.true_positive_threeway
        per_rep[r.replication] = (tp, total)
    vals = [tp / tot for tp, tot in per_rep.values() if tot > 0]
    if len(vals) < min_defined:
        return UNDEFINED
    return float(np.mean(vals))


# ---------------------------------------------------------------- baseline


def median_split_baseline(data, moderator: int, rule: str = AND, path_cfg: PathConfig = PathConfig(),
                          ebic_cfg: EbicConfig = EbicConfig(), min_half: int = 10) -> SplitResult:
    """Fit a GGM below and above the moderator's median and compare edges.

    Rows with the moderator at or below the median form the low half. An
    edge is flagged when the two estimates differ in zero pattern or sign;
    its direction is the sign of ``high - low``.
    """
    x = data.values if isinstance(data, RawData) else np.asarray(data, dtype=float)
    n, p = x.shape
    if n < 20:
        raise ValueError(f"median split needs n >= 20, got {n}")
    if not 1 <= moderator <= p:
        raise ValueError(f"moderator index out of range 1..{p}")
    m = x[:, moderator - 1]
    med = np.median(m)
    low = np.flatnonzero(m <= med)
    high = np.flatnonzero(m > med)
    if min(low.size, high.size) < min_half:
        raise ValueError(f"median split leaves a half with fewer than {min_half} rows")
    names = data.column_names if isinstance(data, RawData) else ()
    lo = fit_mnm_full(RawData(x[low], names), None, rule, path_cfg, ebic_cfg).model
    hi = fit_mnm_full(RawData(x[high], names), None, rule, path_cfg, ebic_cfg).model
    flagged = []
    for key in sorted(set(lo.beta) | set(hi.beta)):
        a, b = lo.get(key), hi.get(key)
        if np.sign(a) != np.sign(b):
            flagged.append((key[0], key[1], int(np.sign(b - a))))
    return SplitResult(lo, hi, tuple(flagged), low, high)


# ---------------------------------------------------------------- protocol


def _seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def prefix_digest(x: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(x).tobytes()).hexdigest()


def check_nesting(data: np.ndarray, n_grid: Sequence[int]) -> None:
    """Each prefix must be exactly the leading rows of the next larger one."""
    for a, b in zip(n_grid, n_grid[1:]):
        small, big = data[:a], data[:b]
        if prefix_digest(small) != prefix_digest(big[:a]):
            raise AssertionError(f"prefix n={a} is not nested in n={b}")


@dataclass
class _Stats:
    max_kkt: float = 0.0
    n_fits: int = 0
    nonconverged: int = 0

    def add(self, result):
        for f in result.fits:
            self.max_kkt = max(self.max_kkt, f.kkt)
            self.n_fits += 1
            self.nonconverged += not f.selected.converged


def _estimate(name, raw: RawData, info: GeneratingModelInfo, cfg: SimConfig, stats: _Stats, mods=None):
    p = raw.p
    moderator = info.moderator
    if name == "MNM1":
        res = fit_mnm_full(raw, mods if mods is not None else (moderator,), cfg.rule, cfg.path, cfg.ebic, cfg.check_kkt)
        stats.add(res)
        return res.model
    if name == "MNM3":
        res = fit_mnm_full(raw, "all", cfg.rule, cfg.path, cfg.ebic, cfg.check_kkt)
        stats.add(res)
        return res.model
    if name == "MNM2":
        models = []
        for m in range(1, p + 1):
            res = fit_mnm_full(raw, (m,), cfg.rule, cfg.path, cfg.ebic, cfg.check_kkt)
            stats.add(res)
            models.append(res.model)
        return union_models(models)
    raise ValueError(name)


def replication_sample(r: int, info: GeneratingModelInfo, cfg: SimConfig):
    """The ``max(n_grid)`` cases drawn for replication ``r``."""
    return gibbs_sample(info.model, max(cfg.n_grid), cfg.sampler.with_seed(_seed(cfg.seed, 2, r)))


def _replicate(r: int, info: GeneratingModelInfo, cfg: SimConfig, mods=None):
    types = true_parameter_types(info)
    try:
        batch = replication_sample(r, info, cfg)
    except SamplerAbort as exc:
        log.warning("replication %d skipped: %s", r, exc)
        return r, None, None, _Stats()
    data = batch.data
    check_nesting(data, cfg.n_grid)
    stats = _Stats()
    records = []
    for n in cfg.n_grid:
        raw = RawData(data[:n])
        for name in cfg.estimators:
            if name == "SPLIT":
                split = median_split_baseline(raw, info.moderator, cfg.rule, cfg.path, cfg.ebic)
                records.extend(score_split(split, info, r, n))
            else:
                est = _estimate(name, raw, info, cfg, stats, mods)
                records.extend(score_model(est, info.model, types, r, n, name))
    return r, records, batch.rejection_rate, stats


def _collect(results, cfg) -> SimulationRun:
    run = SimulationRun([], cfg)
    for r, recs, rate, stats in sorted(results, key=lambda t: t[0]):
        if recs is None:
            run.skipped.append(r)
            continue
        run.records.extend(recs)
        run.rejection_rates[r] = rate
        run.max_kkt = max(run.max_kkt, stats.max_kkt)
        run.n_fits += stats.n_fits
        run.nonconverged += stats.nonconverged
    return run


def generating_models(cfg: SimConfig) -> list:
    """The replication models: random candidates, screened by rejection rate."""
    if not cfg.screen:
        return [random_mnm(_seed(cfg.seed, 1, r)) for r in range(cfg.replications)]
    n_cand = int(math.ceil(cfg.replications / cfg.keep_ratio - 1e-9))
    cands = [random_mnm(_seed(cfg.seed, 1, c)) for c in range(n_cand)]
    kept = screen_models([c.model for c in cands], cfg.n_probe, cfg.sampler.with_seed(_seed(cfg.seed, 3)),
                         keep=cfg.replications)
    return [cands[i] for i, _, _ in kept]


def run_simulation(cfg: SimConfig = SimConfig()) -> SimulationRun:
    """Main simulation: random 13-variable models, nested sample sizes.

    Every replication draws ``max(n_grid)`` cases once and evaluates each
    estimator on the leading ``n`` rows for every ``n`` in the grid.
    """
    infos = generating_models(cfg)
    results = Parallel(n_jobs=cfg.jobs)(delayed(_replicate)(r, info, cfg) for r, info in enumerate(infos))
    run = _collect(results, cfg)
    if run.skipped:
        log.warning("%d replications skipped after sampler aborts", len(run.skipped))
    return run


def run_isolated_types(cfg: SimConfig) -> SimulationRun:
    """Isolated-types model estimated with its true moderators {1, 4}."""
    info = isolated_types_model()
    cfg = SimConfig(cfg.n_grid, cfg.replications, ("MNM1",), cfg.seed, cfg.rule, cfg.gamma, cfg.path,
                    cfg.sampler, False, cfg.n_probe, cfg.keep_ratio, cfg.check_kkt, cfg.jobs)
    results = Parallel(n_jobs=cfg.jobs)(delayed(_replicate)(r, info, cfg, (1, 4)) for r in range(cfg.replications))
    return _collect(results, cfg)


def _neighbors_rep(r, k, cfg):
    model = uncorrelated_neighbors_ggm(k)
    scfg = cfg.sampler.with_seed(_seed(cfg.seed, 4, k, r))
    try:
        data = gibbs_sample(model, max(cfg.n_grid), scfg).data
    except SamplerAbort as exc:
        log.warning("neighbors k=%d replication %d skipped: %s", k, r, exc)
        return r, None, None, _Stats()
    check_nesting(data, cfg.n_grid)
    types = {key: PW_UNMOD for key in model.beta}
    stats = _Stats()
    records = []
    for n in cfg.n_grid:
        res = fit_mnm_full(RawData(data[:n]), None, cfg.rule, cfg.path, cfg.ebic, cfg.check_kkt)
        stats.add(res)
        records.extend(score_model(res.model, model, types, r, n, f"GGM-k{k}"))
    return r, records, None, stats


def run_neighbors_experiment(cfg: SimConfig, ks: Sequence[int] = (1, 2, 3, 4)):
    """Sensitivity for node-1 edges as the number of its neighbors grows.

    Returns ``(curves, run)`` where ``curves[k][n]`` is the sensitivity.
    """
    all_records = SimulationRun([], cfg)
    curves = {}
    for k in ks:
        results = Parallel(n_jobs=cfg.jobs)(delayed(_neighbors_rep)(r, k, cfg) for r in range(cfg.replications))
        run = _collect(results, cfg)
        all_records.records.extend(run.records)
        all_records.skipped.extend((k, r) for r in run.skipped)
        all_records.max_kkt = max(all_records.max_kkt, run.max_kkt)
        all_records.n_fits += run.n_fits
        curves[k] = {n: sensitivity(run, f"GGM-k{k}", PW_UNMOD, n) for n in cfg.n_grid}
    return curves, all_records


# ---------------------------------------------------------------- output


def metric_rows(run) -> list:
    """Per-replication metric rows ``(replication, n, estimator, metric, target, value)``."""
    recs = run.records if isinstance(run, SimulationRun) else run
    rows = []
    seen = set()
    for r in recs:
        rows.append((r.replication, r.n, r.estimator, "sensitivity", r.param_type, r.recovered_count / r.true_count))
        key = (r.replication, r.n, r.estimator)
        if key in seen:
            continue
        seen.add(key)
        for cls, tot, tp in (("pairwise", r.est_pairwise_total, r.true_positive_pairwise),
                             ("threeway", r.est_threeway_total, r.true_positive_threeway)):
            rows.append((r.replication, r.n, r.estimator, "precision", cls, tp / tot if tot else None))
    return rows


def write_results_csv(path, run) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replication", "n", "estimator", "metric", "target", "value"])
        for rep, n, est, metric, target, value in metric_rows(run):
            w.writerow([rep, n, est, metric, target, "" if value is None else f"{value:.17g}"])


_LABELS = {"MNM1": "MNM (1)", "MNM2": "MNM (2)", "MNM3": "MNM (3)", "SPLIT": "SPLIT"}


def summary_table(run, param_type: str, estimators: Sequence[str] | None = None, n_grid=None) -> str:
    """Text table: rows estimator x {SE, PR}, columns n; UNDEFINED cells blank."""
    recs = run.records if isinstance(run, SimulationRun) else run
    n_grid = n_grid or sorted({r.n for r in recs})
    if estimators is None:
        estimators = [e for e in ESTIMATORS + tuple(sorted({r.estimator for r in recs} - set(ESTIMATORS)))
                      if any(r.estimator == e and r.param_type == param_type for r in recs)]
    cls = "pairwise" if param_type in PAIRWISE_TYPES else "threeway"
    width = 6
    lines = [param_type, f"{'':10}{'':4}" + "".join(f"{n:>{width}}" for n in n_grid)]
    for metric in ("SE", "PR"):
        for e in estimators:
            cells = []
            for n in n_grid:
                if metric == "SE":
                    v = sensitivity(recs, e, param_type, n)
                else:
                    v = precision(recs, e, cls, n)
                cells.append(f"{'':>{width}}" if v is UNDEFINED else f"{v:>{width}.2f}")
            lines.append(f"{_LABELS.get(e, e):10}{metric:4}" + "".join(cells))
    return "\n".join(lines)


def summary_tables(run, estimators=None) -> str:
    recs = run.records if isinstance(run, SimulationRun) else run
    present = {r.param_type for r in recs}
    return "\n\n".join(summary_table(recs, t, estimators) for t in PARAM_TYPES if t in present)
