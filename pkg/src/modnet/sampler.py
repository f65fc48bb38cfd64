"""Gibbs rejection sampling from moderated network models.

Every case comes from its own chain, started from i.i.d. standard normals
and run for ``burn_in`` full sweeps of the conditional Gaussians. The final
state is kept unless some variable lies outside ``[-tau, tau]``; such chains
are discarded and restarted from a fresh initialization.

Randomness for attempt ``a`` of case ``k`` comes from a Philox-4x64 stream
keyed by ``(seed, k << 32 | a)``, so results do not depend on how chains are
batched or on the order in which they finish.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MnmModel, as_moderators, predictor_terms
from .solver import SolverError, ols

GENERATOR_NAME = "numpy Philox4x64 (key = seed, case<<32|attempt), ziggurat normals"
# states beyond this are treated as diverged before the end of burn-in
_DIVERGED = 1e12
_BATCH = 2048


class SamplerAbort(RuntimeError):
    """A case could not be drawn within the attempt budget."""

    def __init__(self, case, attempts, rejection_rate):
        super().__init__(
            f"case {case} rejected {attempts} times in a row "
            f"(rejection rate so far {rejection_rate:.3f}); the model is likely not normalizable"
        )
        self.case = case
        self.attempts = attempts
        self.rejection_rate = rejection_rate


@dataclass(frozen=True)
class SamplerConfig:
    tau: float = 3.09
    burn_in: int = 100
    max_attempts_per_case: int = 1000
    seed: int = 0
    check_every_sweep: bool = False

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.burn_in < 1:
            raise ValueError("burn_in must be at least 1")
        if self.max_attempts_per_case < 1:
            raise ValueError("max_attempts_per_case must be at least 1")

    def with_seed(self, seed: int) -> "SamplerConfig":
        return SamplerConfig(self.tau, self.burn_in, self.max_attempts_per_case, seed, self.check_every_sweep)


@dataclass(frozen=True)
class SampleBatch:
    data: np.ndarray
    rejected_chains: int
    attempted_chains: int

    @property
    def rejection_rate(self) -> float:
        return self.rejected_chains / self.attempted_chains if self.attempted_chains else 0.0

    def metadata(self, cfg: SamplerConfig) -> dict:
        return {
            "seed": cfg.seed,
            "tau": cfg.tau,
            "burn_in": cfg.burn_in,
            "rejection_rate": self.rejection_rate,
            "rejected_chains": self.rejected_chains,
            "attempted_chains": self.attempted_chains,
            "generator_name": GENERATOR_NAME,
        }


def conditional_mean(model: MnmModel, s: int, x) -> float:
    """Mean of variable ``s`` (1-based) given the values ``x`` of all others."""
    if not 1 <= s <= model.p:
        raise ValueError(f"node index out of range 1..{model.p}: {s}")
    x = np.asarray(x, dtype=float)
    mu = model.alpha[s - 1]
    for (i, j), b in model.beta.items():
        if i == s:
            mu += b * x[j - 1]
        elif j == s:
            mu += b * x[i - 1]
    for key, w in model.omega.items():
        if s in key:
            a, c = (k for k in key if k != s)
            mu += w * x[a - 1] * x[c - 1]
    return float(mu)


class _Conditionals:
    """Vectorized conditional means for a batch of states."""

    def __init__(self, model: MnmModel):
        self.p = model.p
        self.alpha = model.alpha.copy()
        self.sigma = model.sigma.copy()
        self.beta = model.beta_matrix()
        pairs = [([], [], []) for _ in range(model.p)]
        for key, w in model.omega.items():
            if w == 0.0:
                continue
            for s in key:
                a, c = (k - 1 for k in key if k != s)
                pairs[s - 1][0].append(a)
                pairs[s - 1][1].append(c)
                pairs[s - 1][2].append(w)
        self.pairs = [(np.array(a, dtype=int), np.array(c, dtype=int), np.array(w)) for a, c, w in pairs]

    def mean(self, x: np.ndarray, s: int) -> np.ndarray:
        mu = self.alpha[s] + x @ self.beta[:, s]
        a, c, w = self.pairs[s]
        if w.size:
            mu = mu + (x[:, a] * x[:, c]) @ w
        return mu


def _chain_randomness(seed: int, case: int, attempt: int, p: int, burn_in: int) -> np.ndarray:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, (int(case) << 32) | int(attempt)]
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal((burn_in + 1, p))


def _run_chains(cond: _Conditionals, draws: np.ndarray, cfg: SamplerConfig):
    """Run a batch of chains. ``draws`` has shape (B, burn_in + 1, p)."""
    x = draws[:, 0, :].copy()
    ok = np.ones(x.shape[0], dtype=bool)
    bound = cfg.tau if cfg.check_every_sweep else _DIVERGED
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(1, cfg.burn_in + 1):
            for s in range(cond.p):
                x[:, s] = cond.mean(x, s) + cond.sigma[s] * draws[:, t, s]
            bad = ~(np.abs(x) <= bound).all(axis=1)
            if bad.any():
                ok &= ~bad
                x[bad] = 0.0
        ok &= (np.abs(x) <= cfg.tau).all(axis=1)
    return x, ok


def gibbs_sample(model: MnmModel, n_cases: int, cfg: SamplerConfig = SamplerConfig()) -> SampleBatch:
    """Draw ``n_cases`` cases, one independent chain (with restarts) per case.

    Raises
    ------
    SamplerAbort
        If some case is rejected ``max_attempts_per_case`` times.
    """
    cond = _Conditionals(model)
    p = model.p
    out = np.empty((n_cases, p))
    next_attempt = np.zeros(n_cases, dtype=int)
    pending = list(range(n_cases))
    rejected = 0
    tried = 0
    accepted = 0
    while pending:
        # speculative attempts per pending case, sized by the rejection seen so far
        rate = rejected / tried if tried else 0.0
        per_case = 1 if rate < 0.5 else min(int(math.ceil(1.0 / max(1.0 - rate, 1e-3))), 64)
        jobs = []
        for case in pending:
            first = next_attempt[case]
            last = min(first + per_case, cfg.max_attempts_per_case)
            jobs.extend((case, a) for a in range(first, last))
        results = {}
        for start in range(0, len(jobs), _BATCH):
            chunk = jobs[start:start + _BATCH]
            draws = np.stack([_chain_randomness(cfg.seed, c, a, p, cfg.burn_in) for c, a in chunk])
            x, ok = _run_chains(cond, draws, cfg)
            for (c, a), xi, oki in zip(chunk, x, ok):
                results[(c, a)] = xi if oki else None
        still = []
        for case in pending:
            a = next_attempt[case]
            while a < cfg.max_attempts_per_case and (case, a) in results:
                tried += 1
                if results[(case, a)] is not None:
                    out[case] = results[(case, a)]
                    accepted += 1
                    break
                rejected += 1
                a += 1
            else:
                if a >= cfg.max_attempts_per_case:
                    raise SamplerAbort(case, a, rejected / max(tried, 1))
                next_attempt[case] = a
                still.append(case)
        pending = still
    assert np.all(np.abs(out) <= cfg.tau)
    out.flags.writeable = False
    return SampleBatch(out, rejected, tried)


def screen_models(candidates, n_probe: int, cfg: SamplerConfig = SamplerConfig(),
                  keep_ratio: float = 100 / 130, keep: int | None = None):
    """Rank candidate models by rejection rate and keep the best fraction.

    Returns a list of ``(index, model, rejection_rate)`` in ascending order of
    rejection rate; ties keep the original order. A candidate whose sampler
    aborts counts as rejection rate 1.
    """
    if not candidates:
        raise ValueError("no candidate models")
    rates = []
    for idx, m in enumerate(candidates):
        try:
            rates.append(gibbs_sample(m, n_probe, cfg.with_seed(cfg.seed + idx)).rejection_rate)
        except SamplerAbort:
            rates.append(1.0)
    order = sorted(range(len(candidates)), key=lambda i: rates[i])
    if keep is None:
        keep = int(math.ceil(keep_ratio * len(candidates) - 1e-9))
    return [(i, candidates[i], rates[i]) for i in order[:keep]]


def bias_check(model: MnmModel, data: np.ndarray, moderators, types: dict | None = None) -> dict:
    """Mean unpenalized least-squares estimates of the true nonzero parameters.

    Each node is regressed (with intercept) on the other variables and the
    products admitted by ``moderators``, on the scale of ``data``. Every true
    parameter is estimated by averaging its 2 (pairwise) or 3 (3-way)
    nodewise estimates.

    ``types`` maps parameter keys to a type label; the result holds the mean
    estimate per label. Without ``types`` the labels are ``"pairwise"`` and
    ``"threeway"``.
    """
    data = np.asarray(data, dtype=float)
    p = model.p
    mods = as_moderators(moderators, p)
    est = {}
    for s in range(1, p + 1):
        terms = predictor_terms(p, mods, s)
        cols = [data[:, t[0] - 1] if len(t) == 1 else data[:, t[0] - 1] * data[:, t[1] - 1] for t in terms]
        try:
            coef, _ = ols(np.column_stack(cols), data[:, s - 1])
        except SolverError as exc:
            raise SolverError(f"node {s}: {exc}") from exc
        for t, c in zip(terms, coef):
            est.setdefault(tuple(sorted(t + (s,))), []).append(c)
    targets = dict(model.nonzero_beta())
    targets.update(model.nonzero_omega())
    if types is None:
        types = {k: ("pairwise" if len(k) == 2 else "threeway") for k in targets}
    sums = {}
    for key in targets:
        label = types[key]
        sums.setdefault(label, []).append(float(np.mean(est[key])))
    return {label: float(np.mean(v)) for label, v in sums.items()}
