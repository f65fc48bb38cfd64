"""Lasso by cyclic coordinate descent with warm-started paths and EBIC selection.

The objective on the internal (column-standardized) scale is::

    (1 / (2n)) * ||y - b0 - X b||^2 + lambda * ||b||_1

Coordinate descent runs on the Gram matrix ``X'X / n`` so that a sweep costs
O(K^2) regardless of n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit


class SolverError(RuntimeError):
    """Numerical failure in the lasso solver."""


@dataclass(frozen=True)
class PathConfig:
    n_lambda: int = 50
    lambda_min_ratio: float = 0.01
    tol: float = 1e-7
    max_iter: int = 10000

    def __post_init__(self):
        if not 0 < self.lambda_min_ratio < 1:
            raise ValueError("lambda_min_ratio must lie in (0, 1)")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.n_lambda < 1 or self.max_iter < 1:
            raise ValueError("n_lambda and max_iter must be positive")


@dataclass(frozen=True)
class EbicConfig:
    gamma: float = 0.5

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")


@dataclass(frozen=True)
class DesignMatrix:
    """Internally standardized predictors plus the raw column moments.

    ``columns`` has mean 0 and sample SD 1 per column; ``col_means`` and
    ``col_sds`` describe the raw columns they were derived from.
    """

    columns: np.ndarray
    term_ids: tuple
    col_means: np.ndarray
    col_sds: np.ndarray
    _gram: np.ndarray = field(default=None, repr=False, compare=False)

    @classmethod
    def from_raw(cls, raw: np.ndarray, term_ids=None) -> "DesignMatrix":
        raw = np.asarray(raw, dtype=float)
        if raw.ndim != 2:
            raise ValueError("design must be 2-d")
        n, k = raw.shape
        if term_ids is None:
            term_ids = tuple((j + 1,) for j in range(k))
        term_ids = tuple(term_ids)
        if len(term_ids) != k or len(set(term_ids)) != k:
            raise ValueError("term_ids must be unique and match the column count")
        means = raw.mean(axis=0)
        centered = raw - means
        sds = centered.std(axis=0, ddof=1) if n > 1 else np.zeros(k)
        if np.any(~(sds > 0)):
            bad = int(np.flatnonzero(~(sds > 0))[0])
            raise ValueError(f"design column {term_ids[bad]} has zero variance")
        cols = centered / sds
        cols -= cols.mean(axis=0)
        cols.flags.writeable = False
        return cls(cols, term_ids, means, sds)

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def k(self) -> int:
        return self.columns.shape[1]

    def gram(self) -> np.ndarray:
        if self._gram is None:
            g = self.columns.T @ self.columns / self.n
            g = np.ascontiguousarray((g + g.T) / 2)
            object.__setattr__(self, "_gram", g)
        return self._gram

    def permute(self, order) -> "DesignMatrix":
        order = np.asarray(order)
        return DesignMatrix(
            np.ascontiguousarray(self.columns[:, order]),
            tuple(self.term_ids[i] for i in order),
            self.col_means[order],
            self.col_sds[order],
        )


@dataclass(frozen=True)
class LassoFit:
    lambda_: float
    coefficients: np.ndarray
    intercept: float
    rss: float
    df: int
    iterations: int
    converged: bool
    internal_coefficients: np.ndarray = field(repr=False, default=None)


def soft_threshold(z: float, t: float) -> float:
    """``sign(z) * max(|z| - t, 0)``."""
    if t < 0:
        raise ValueError("threshold must be non-negative")
    return math.copysign(max(abs(z) - t, 0.0), z) if abs(z) > t else 0.0


@njit(cache=True)
def _cd_gram(gram, xty, lam, beta, tol, max_iter):
    # grad holds xty - gram @ beta and is kept in sync with beta
    k = xty.shape[0]
    grad = xty - gram @ beta
    for it in range(max_iter):
        dmax = 0.0
        for j in range(k):
            gjj = gram[j, j]
            z = grad[j] + gjj * beta[j]
            if z > lam:
                new = (z - lam) / gjj
            elif z < -lam:
                new = (z + lam) / gjj
            else:
                new = 0.0
            d = new - beta[j]
            if d != 0.0:
                beta[j] = new
                for m in range(k):
                    grad[m] -= d * gram[m, j]
                if abs(d) > dmax:
                    dmax = abs(d)
        if dmax < tol:
            return it + 1, True
    return max_iter, False


def lasso_gram(gram, xty, lam, beta0=None, tol=1e-7, max_iter=10000):
    """Coordinate descent on ``(1/2) b'Gb - c'b + lam ||b||_1``.

    Works for any positive semi-definite ``gram`` with positive diagonal; no
    standardization is assumed. Returns ``(beta, iterations, converged)``.
    """
    gram = np.ascontiguousarray(gram, dtype=float)
    xty = np.ascontiguousarray(xty, dtype=float)
    beta = np.zeros(xty.shape[0]) if beta0 is None else np.array(beta0, dtype=float)
    it, ok = _cd_gram(gram, xty, float(lam), beta, float(tol), int(max_iter))
    return beta, int(it), bool(ok)


def _centered_response(y):
    y = np.asarray(y, dtype=float)
    ybar = float(y.mean())
    return y - ybar, ybar


def lambda_max(X: DesignMatrix, y) -> float:
    yc, _ = _centered_response(y)
    if X.k == 0:
        return 0.0
    return float(np.max(np.abs(X.columns.T @ yc)) / X.n)


def lambda_path(X: DesignMatrix, y, cfg: PathConfig = PathConfig()) -> np.ndarray:
    """Geometric, descending lambda sequence from ``max |x_k'y| / n``.

    An all-zero response (or an empty design) gives the single value 0.
    """
    lmax = lambda_max(X, y)
    if lmax == 0.0:
        return np.zeros(1)
    if cfg.n_lambda == 1:
        return np.array([lmax])
    return lmax * np.geomspace(1.0, cfg.lambda_min_ratio, cfg.n_lambda)


def _make_fit(X, yc, ybar, yy, xty, lam, b, it, ok):
    gram = X.gram()
    rss = yy - 2.0 * X.n * float(b @ xty) + X.n * float(b @ gram @ b)
    rss = max(rss, 0.0)
    coef = b / X.col_sds
    intercept = ybar - float(coef @ X.col_means)
    b.flags.writeable = False
    coef.flags.writeable = False
    return LassoFit(float(lam), coef, intercept, rss, int(np.count_nonzero(b)), it, ok, b)


def fit_lasso(X: DesignMatrix, y, lam: float, warm_start=None, cfg: PathConfig = PathConfig()) -> LassoFit:
    """Solve the lasso at a single ``lam``.

    ``warm_start`` is given on the internal scale (``internal_coefficients``
    of a previous fit). Non-convergence is reported through ``converged``.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    yc, ybar = _centered_response(y)
    if yc.shape[0] != X.n:
        raise ValueError("response length does not match design")
    xty = X.columns.T @ yc / X.n
    b, it, ok = lasso_gram(X.gram(), xty, lam, warm_start, cfg.tol, cfg.max_iter)
    return _make_fit(X, yc, ybar, float(yc @ yc), xty, lam, b, it, ok)


def fit_path(X: DesignMatrix, y, cfg: PathConfig = PathConfig()) -> list:
    """Fits along :func:`lambda_path`, each warm-started from the previous one."""
    yc, ybar = _centered_response(y)
    yy = float(yc @ yc)
    xty = X.columns.T @ yc / X.n
    gram = X.gram()
    b = np.zeros(X.k)
    fits = []
    for lam in lambda_path(X, y, cfg):
        b, it, ok = lasso_gram(gram, xty, lam, b, cfg.tol, cfg.max_iter)
        fits.append(_make_fit(X, yc, ybar, yy, xty, lam, b.copy(), it, ok))
    return fits


def kkt_violation(X: DesignMatrix, y, fit: LassoFit) -> float:
    """Largest violation of the lasso optimality conditions (internal scale).

    For zero coefficients the excess of ``|x_k'r|/n`` over lambda; for
    nonzero ones ``|x_k'r/n - lambda * sign(b_k)|``.
    """
    yc, _ = _centered_response(y)
    b = fit.internal_coefficients
    r = yc - X.columns @ b
    g = X.columns.T @ r / X.n
    zero = b == 0
    viol = np.zeros(X.k)
    viol[zero] = np.maximum(np.abs(g[zero]) - fit.lambda_, 0.0)
    viol[~zero] = np.abs(g[~zero] - fit.lambda_ * np.sign(b[~zero]))
    return float(viol.max()) if viol.size else 0.0


def lasso_objective(X: DesignMatrix, y, b, lam) -> float:
    yc, _ = _centered_response(y)
    r = yc - X.columns @ b
    return float(r @ r / (2 * X.n) + lam * np.abs(b).sum())


def ebic(fit: LassoFit, n: int, k: int, cfg: EbicConfig = EbicConfig()) -> float:
    """Extended BIC: ``n ln(rss/n) + df ln(n) + 2 gamma df ln(K)``."""
    if not fit.rss > 0:
        raise SolverError("EBIC undefined for a zero-residual (interpolating) fit")
    score = n * math.log(fit.rss / n) + fit.df * math.log(n)
    if fit.df:
        score += 2.0 * cfg.gamma * fit.df * math.log(k)
    return score


def select_lambda(path_fits, n: int, k: int, cfg: EbicConfig = EbicConfig()) -> LassoFit:
    """EBIC-minimizing fit; ties go to the larger lambda."""
    if not path_fits:
        raise ValueError("empty path")
    scores = ebic_scores(path_fits, n, k, cfg)
    best = 0
    for i, s in enumerate(scores):
        better = s < scores[best] or (s == scores[best] and path_fits[i].lambda_ > path_fits[best].lambda_)
        if better:
            best = i
    return path_fits[best]


def ebic_scores(path_fits, n: int, k: int, cfg: EbicConfig = EbicConfig()) -> list:
    out = []
    for f in path_fits:
        # exact interpolation can only occur when df >= n - 1
        out.append(ebic(f, n, k, cfg) if f.rss > 0 else math.inf)
    return out


def ols(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Least squares with intercept. Returns ``(coefficients, intercept)``.

    Raises SolverError when the centered design is rank deficient.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x.mean(axis=0)
    xc = x - xm
    if np.linalg.matrix_rank(xc) < x.shape[1]:
        raise SolverError("singular design in least squares")
    coef, *_ = np.linalg.lstsq(xc, y - y.mean(), rcond=None)
    return coef, float(y.mean() - coef @ xm)
