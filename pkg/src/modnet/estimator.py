"""Nodewise lasso estimation of moderated network models.

Each variable is regressed on all others plus the admissible product terms;
the per-node estimates are then combined into one joint model with the AND
or OR rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    ModeratorSet,
    MnmModel,
    RawData,
    StandardizedData,
    as_moderators,
    canonical,
    predictor_terms,
    standardize,
)
from .solver import (
    DesignMatrix,
    EbicConfig,
    LassoFit,
    PathConfig,
    SolverError,
    ebic_scores,
    fit_path,
    kkt_violation,
    select_lambda,
)

AND = "and"
OR = "or"


class EstimationError(RuntimeError):
    def __init__(self, node, message):
        super().__init__(f"node {node}: {message}")
        self.node = node


@dataclass(frozen=True)
class NodewiseFit:
    node: int
    selected: LassoFit
    term_ids: tuple
    ebic_trace: tuple
    lambdas: tuple = ()
    kkt: float = 0.0

    def estimates(self) -> dict:
        """Map each joint-model key to this regression's estimate of it."""
        out = {}
        for term, coef in zip(self.term_ids, self.selected.coefficients):
            out[canonical(term + (self.node,))] = float(coef)
        return out


@dataclass(frozen=True)
class CombinedSequentialModel:
    per_moderator_models: tuple
    union_model: MnmModel


def build_design(data: StandardizedData, s: int, mods: ModeratorSet) -> DesignMatrix:
    """Predictors of the regression on node ``s`` (1-based).

    Main effects are the standardized variables themselves; product columns
    are products of standardized variables and get re-centered and scaled to
    unit SD inside the design.
    """
    mods = as_moderators(mods, data.p)
    terms = predictor_terms(data.p, mods, s)
    x = data.values
    raw = np.empty((data.n, len(terms)))
    for c, t in enumerate(terms):
        if len(t) == 1:
            raw[:, c] = x[:, t[0] - 1]
        else:
            raw[:, c] = x[:, t[0] - 1] * x[:, t[1] - 1]
    return DesignMatrix.from_raw(raw, terms)


def fit_node(data: StandardizedData, s: int, mods: ModeratorSet,
             path_cfg: PathConfig = PathConfig(), ebic_cfg: EbicConfig = EbicConfig(),
             check_kkt: bool = False) -> NodewiseFit:
    try:
        X = build_design(data, s, mods)
        y = data.values[:, s - 1]
        fits = fit_path(X, y, path_cfg)
        scores = ebic_scores(fits, data.n, X.k, ebic_cfg)
        best = select_lambda(fits, data.n, X.k, ebic_cfg)
    except (SolverError, ValueError) as exc:
        raise EstimationError(s, str(exc)) from exc
    kkt = kkt_violation(X, y, best) if check_kkt else 0.0
    return NodewiseFit(s, best, X.term_ids, tuple(scores), tuple(f.lambda_ for f in fits), kkt)


def fit_nodewise(data: StandardizedData, mods, path_cfg: PathConfig = PathConfig(),
                 ebic_cfg: EbicConfig = EbicConfig(), check_kkt: bool = False,
                 order: Sequence[int] | None = None, jobs: int = 1) -> list:
    """Run the p nodewise regressions; results are returned in node order.

    The regressions are independent, so ``order`` and ``jobs`` never change
    the result.
    """
    mods = as_moderators(mods, data.p)
    nodes = list(order) if order is not None else list(range(1, data.p + 1))
    if jobs == 1:
        fits = [fit_node(data, s, mods, path_cfg, ebic_cfg, check_kkt) for s in nodes]
    else:
        from joblib import Parallel, delayed

        fits = Parallel(n_jobs=jobs)(delayed(fit_node)(data, s, mods, path_cfg, ebic_cfg, check_kkt) for s in nodes)
    return sorted(fits, key=lambda f: f.node)


def gather(fits: Sequence[NodewiseFit]) -> tuple[dict, dict]:
    """Collect every nodewise estimate per joint parameter key.

    Returns ``(pairwise, threeway)`` dicts of key -> list of estimates.
    """
    pw, tw = {}, {}
    for f in fits:
        for key, v in f.estimates().items():
            (pw if len(key) == 2 else tw).setdefault(key, []).append(v)
    return pw, tw


def combine(values: Sequence[float], rule: str) -> float:
    """Aggregate the estimates of one parameter.

    OR averages all values (zeros included) and is zero only if all are
    zero; AND averages only when every value is nonzero.
    """
    rule = rule.lower()
    if rule == AND:
        return float(np.mean(values)) if all(v != 0.0 for v in values) else 0.0
    if rule == OR:
        return float(np.mean(values)) if any(v != 0.0 for v in values) else 0.0
    raise ValueError(f"unknown aggregation rule {rule!r}")


def aggregate(fits: Sequence[NodewiseFit], rule: str = AND, p: int | None = None,
              sigma=None, column_names=(), meta=None) -> MnmModel:
    p = p if p is not None else len(fits)
    nodes = sorted(f.node for f in fits)
    if nodes != list(range(1, p + 1)):
        missing = sorted(set(range(1, p + 1)) - set(nodes))
        raise ValueError(f"missing nodewise fit for node {missing[0] if missing else nodes}")
    pw, tw = gather(fits)
    for key, vals in pw.items():
        if len(vals) != 2:
            raise AssertionError(f"pairwise {key} gathered {len(vals)} estimates")
    for key, vals in tw.items():
        if len(vals) != 3:
            raise AssertionError(f"3-way {key} gathered {len(vals)} estimates")
    beta = {k: combine(v, rule) for k, v in pw.items()}
    omega = {k: combine(v, rule) for k, v in tw.items()}
    beta = {k: v for k, v in beta.items() if v != 0.0}
    omega = {k: v for k, v in omega.items() if v != 0.0}
    if sigma is None:
        sigma = np.ones(p)
    return MnmModel(p, np.zeros(p), beta, omega, sigma, tuple(column_names), dict(meta or {}))


def residual_sd(fit: NodewiseFit, n: int) -> float:
    dof = n - fit.selected.df - 1
    if dof <= 0:
        return math.sqrt(fit.selected.rss / n) if fit.selected.rss > 0 else 1.0
    return math.sqrt(fit.selected.rss / dof)


@dataclass(frozen=True)
class FitResult:
    """A fitted model together with the nodewise fits it was built from."""

    model: MnmModel
    fits: tuple
    data: StandardizedData = field(repr=False, default=None)


def fit_mnm_full(data, mods=None, rule: str = AND, path_cfg: PathConfig = PathConfig(),
                 ebic_cfg: EbicConfig = EbicConfig(), check_kkt: bool = False, jobs: int = 1) -> FitResult:
    if isinstance(data, StandardizedData):
        sd = data
    else:
        sd = standardize(data if isinstance(data, RawData) else RawData(data))
    mods = as_moderators(mods, sd.p)
    fits = fit_nodewise(sd, mods, path_cfg, ebic_cfg, check_kkt, jobs=jobs)
    sigma = np.array([residual_sd(f, sd.n) for f in fits])
    sigma[~(sigma > 0)] = 1.0
    meta = {"rule": rule.upper(), "gamma": ebic_cfg.gamma, "moderators": list(mods.members)}
    model = aggregate(fits, rule, sd.p, sigma, sd.column_names, meta)
    return FitResult(model, tuple(fits), sd)


def fit_mnm(data, mods=None, rule: str = AND, path_cfg: PathConfig = PathConfig(),
            ebic_cfg: EbicConfig = EbicConfig()) -> MnmModel:
    """Standardize, run the nodewise regressions and aggregate.

    Parameters
    ----------
    data : RawData, StandardizedData or array
    mods : ModeratorSet, iterable of 1-based indices, "all" or None
    rule : "and" or "or"
    """
    return fit_mnm_full(data, mods, rule, path_cfg, ebic_cfg).model


def union_models(models: Sequence[MnmModel]) -> MnmModel:
    """Combine models by taking every parameter nonzero in at least one.

    The value is the mean over the models where it is nonzero; when those
    disagree in sign the value of largest magnitude is kept.
    """
    p = models[0].p

    def merge(dicts):
        vals = {}
        for d in dicts:
            for k, v in d.items():
                if v != 0.0:
                    vals.setdefault(k, []).append(v)
        out = {}
        for k, vs in vals.items():
            if min(vs) < 0 < max(vs):
                out[k] = max(vs, key=abs)
            else:
                out[k] = float(np.mean(vs))
        return out

    beta = merge(m.beta for m in models)
    omega = merge(m.omega for m in models)
    sigma = np.mean([m.sigma for m in models], axis=0)
    return MnmModel(p, np.zeros(p), beta, omega, sigma, models[0].column_names,
                    {"sequential": True, "rule": models[0].meta.get("rule")})


def fit_sequential(data, rule: str = AND, path_cfg: PathConfig = PathConfig(),
                   ebic_cfg: EbicConfig = EbicConfig()) -> CombinedSequentialModel:
    """Fit one model per single moderator m = 1..p and take their union."""
    sd = data if isinstance(data, StandardizedData) else standardize(data)
    models = tuple(fit_mnm(sd, (m,), rule, path_cfg, ebic_cfg) for m in range(1, sd.p + 1))
    return CombinedSequentialModel(models, union_models(models))


def show_interaction(model: MnmModel, indices: Sequence[int]) -> tuple[float, int]:
    """Stored weight of an interaction and its sign (0 when absent)."""
    idx = [int(i) for i in indices]
    if len(idx) not in (2, 3):
        raise ValueError("interactions have 2 or 3 indices")
    for i in idx:
        if not 1 <= i <= model.p:
            raise ValueError(f"index out of range 1..{model.p}: {i}")
    w = model.get(idx)
    return w, int(np.sign(w))


def format_interaction(model: MnmModel, indices: Sequence[int]) -> str:
    w, sign = show_interaction(model, indices)
    label = {1: "Positive", -1: "Negative", 0: "Absent"}[sign]
    key = "-".join(str(i) for i in sorted(int(i) for i in indices))
    return f"Interaction: {key}\nWeight: {w:.7f}\nSign: {sign} ({label})"
