"""Shared domain types, term indexing and standardization.

Variables are numbered from 1 in every public interface. Parameter keys are
sorted tuples: ``(i, j)`` for a pairwise interaction and ``(i, j, q)`` for a
3-way interaction (moderation effect). One stored value stands for every
permutation of its indices.
"""
from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Term = tuple  # tuple of 1-based variable indices, strictly increasing


class DataError(ValueError):
    """Input data violate the requirements of an operation."""


def _check_key(key: Sequence[int], order: int, p: int) -> tuple:
    key = tuple(int(k) for k in key)
    if len(key) != order:
        raise ValueError(f"expected {order} indices, got {key}")
    if any(k < 1 or k > p for k in key):
        raise ValueError(f"index out of range 1..{p}: {key}")
    if any(a >= b for a, b in zip(key, key[1:])):
        raise ValueError(f"indices must be strictly increasing: {key}")
    return key


def canonical(indices: Iterable[int]) -> tuple:
    """Sort indices into a canonical key, rejecting repeats."""
    key = tuple(sorted(int(i) for i in indices))
    if len(set(key)) != len(key):
        raise ValueError(f"repeated index in {key}")
    return key


@dataclass(frozen=True)
class RawData:
    """Numeric ``n x p`` data matrix with column labels."""

    values: np.ndarray
    column_names: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError("data must be a 2-d matrix")
        n, p = values.shape
        if n < 2:
            raise DataError(f"need at least 2 rows, got {n}")
        if p < 3:
            raise DataError(f"need at least 3 columns, got {p}")
        if not np.all(np.isfinite(values)):
            rows, cols = np.nonzero(~np.isfinite(values))
            raise DataError(f"non-finite value at row {rows[0] + 1}, column {cols[0] + 1}")
        sd = values.std(axis=0, ddof=1)
        zero = np.flatnonzero(~(sd > 0))
        if zero.size:
            raise DataError(f"zero variance, column {zero[0] + 1}")
        names = tuple(self.column_names) or tuple(f"V{k + 1}" for k in range(p))
        if len(names) != p:
            raise DataError(f"{len(names)} column names for {p} columns")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StandardizedData:
    """Column-standardized data together with the original means and SDs."""

    values: np.ndarray
    means: np.ndarray
    sds: np.ndarray
    column_names: tuple = ()

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def unstandardize(self) -> np.ndarray:
        return self.values * self.sds + self.means


def standardize(data: RawData | np.ndarray) -> StandardizedData:
    """Center every column and scale it to unit sample SD (divisor n - 1).

    Raises
    ------
    DataError
        If a column has zero variance; the message names the 1-based column.
    """
    if not isinstance(data, RawData):
        data = RawData(data)
    x = data.values
    means = x.mean(axis=0)
    centered = x - means
    sds = centered.std(axis=0, ddof=1)
    z = centered / sds
    # second pass removes the rounding left by the first
    z -= z.mean(axis=0)
    z /= z.std(axis=0, ddof=1)
    for arr in (z, means, sds):
        arr.flags.writeable = False
    return StandardizedData(z, means, sds, data.column_names)


@dataclass(frozen=True)
class ModeratorSet:
    """Sorted set of 1-based moderator indices (possibly empty)."""

    members: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(set(int(m) for m in self.members))))

    @classmethod
    def all(cls, p: int) -> "ModeratorSet":
        return cls(tuple(range(1, p + 1)))

    @classmethod
    def none(cls) -> "ModeratorSet":
        return cls(())

    def validate(self, p: int) -> "ModeratorSet":
        bad = [m for m in self.members if m < 1 or m > p]
        if bad:
            raise ValueError(f"moderator index out of range 1..{p}: {bad[0]}")
        return self

    def admits(self, triple: Iterable[int]) -> bool:
        """Whether a 3-way term over ``triple`` involves at least one moderator."""
        return not set(triple).isdisjoint(self.members)

    def __contains__(self, item) -> bool:
        return item in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def as_moderators(mods, p: int) -> ModeratorSet:
    """Coerce ``None``, ``"all"``, ``"none"`` or an iterable into a ModeratorSet."""
    if isinstance(mods, ModeratorSet):
        return mods.validate(p)
    if mods is None or (isinstance(mods, str) and mods.lower() == "none"):
        return ModeratorSet.none()
    if isinstance(mods, str) and mods.lower() == "all":
        return ModeratorSet.all(p)
    if isinstance(mods, (int, np.integer)):
        mods = (int(mods),)
    return ModeratorSet(tuple(mods)).validate(p)


def admissible_triples(p: int, mods: ModeratorSet) -> list:
    return [t for t in itertools.combinations(range(1, p + 1), 3) if mods.admits(t)]


def count_terms(p: int, mods: ModeratorSet) -> tuple[int, int]:
    """Number of pairwise and admissible 3-way interaction parameters.

    >>> count_terms(10, ModeratorSet.all(10))
    (45, 120)
    """
    if p < 3:
        raise ValueError("p must be at least 3")
    mods = as_moderators(mods, p)
    n_pair = sum(1 for _ in itertools.combinations(range(p), 2))
    return n_pair, len(admissible_triples(p, mods))


def predictor_terms(p: int, mods: ModeratorSet, s: int) -> list:
    """Candidate predictors of the regression on node ``s``.

    Main effects ``(j,)`` for all j != s come first in ascending order, then
    products ``(i, j)`` with i < j, both != s, whose triple with s contains a
    moderator, in lexicographic order.
    """
    if not 1 <= s <= p:
        raise ValueError(f"node index out of range 1..{p}: {s}")
    others = [j for j in range(1, p + 1) if j != s]
    mains = [(j,) for j in others]
    prods = [(i, j) for i, j in itertools.combinations(others, 2) if mods.admits((i, j, s))]
    return mains + prods


def nodewise_param_count(p: int, mods: ModeratorSet, s: int) -> int:
    return len(predictor_terms(p, as_moderators(mods, p), s))


@dataclass(frozen=True)
class MnmModel:
    """Natural-parameter form of a moderated network model.

    Parameters
    ----------
    p : int
        Number of variables.
    alpha : array, shape (p,)
        Intercepts of the conditional means.
    beta : dict
        ``(i, j) -> value`` with i < j.
    omega : dict
        ``(i, j, q) -> value`` with i < j < q.
    sigma : array, shape (p,)
        Conditional standard deviations.
    """

    p: int
    alpha: np.ndarray
    beta: dict
    omega: dict
    sigma: np.ndarray
    column_names: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = int(self.p)
        if p < 1:
            raise ValueError("p must be positive")
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        sigma = np.array(self.sigma, dtype=float).reshape(-1)
        if alpha.shape != (p,) or sigma.shape != (p,):
            raise ValueError("alpha and sigma must have length p")
        if not np.all(sigma > 0):
            raise ValueError("conditional SDs must be positive")
        beta = {_check_key(k, 2, p): float(v) for k, v in self.beta.items()}
        omega = {_check_key(k, 3, p): float(v) for k, v in self.omega.items()}
        beta = dict(sorted(beta.items()))
        omega = dict(sorted(omega.items()))
        names = tuple(self.column_names) or tuple(f"V{k + 1}" for k in range(p))
        alpha.flags.writeable = False
        sigma.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "column_names", names)

    def __eq__(self, other):
        if not isinstance(other, MnmModel):
            return NotImplemented
        return (
            self.p == other.p
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.sigma, other.sigma)
            and self.beta == other.beta
            and self.omega == other.omega
            and self.column_names == other.column_names
        )

    __hash__ = None

    @classmethod
    def empty(cls, p: int, **kwargs) -> "MnmModel":
        return cls(p, np.zeros(p), {}, {}, np.ones(p), **kwargs)

    def nonzero_beta(self) -> dict:
        return {k: v for k, v in self.beta.items() if v != 0.0}

    def nonzero_omega(self) -> dict:
        return {k: v for k, v in self.omega.items() if v != 0.0}

    def get(self, key: Sequence[int]) -> float:
        key = canonical(key)
        if len(key) == 2:
            return self.beta.get(_check_key(key, 2, self.p), 0.0)
        if len(key) == 3:
            return self.omega.get(_check_key(key, 3, self.p), 0.0)
        raise ValueError("interactions have 2 or 3 indices")

    def beta_matrix(self) -> np.ndarray:
        """Symmetric dense ``p x p`` matrix of pairwise weights (zero diagonal)."""
        b = np.zeros((self.p, self.p))
        for (i, j), v in self.beta.items():
            b[i - 1, j - 1] = b[j - 1, i - 1] = v
        return b

    def relabel(self, perm: Sequence[int]) -> "MnmModel":
        """Model with variable ``k`` renamed to ``perm[k - 1]`` (1-based)."""
        perm = [int(x) for x in perm]
        if sorted(perm) != list(range(1, self.p + 1)):
            raise ValueError("perm must be a permutation of 1..p")
        alpha = np.empty(self.p)
        sigma = np.empty(self.p)
        names = [None] * self.p
        for k in range(self.p):
            alpha[perm[k] - 1] = self.alpha[k]
            sigma[perm[k] - 1] = self.sigma[k]
            names[perm[k] - 1] = self.column_names[k]
        beta = {canonical(perm[i - 1] for i in key): v for key, v in self.beta.items()}
        omega = {canonical(perm[i - 1] for i in key): v for key, v in self.omega.items()}
        return MnmModel(self.p, alpha, beta, omega, sigma, tuple(names), dict(self.meta))

    # ---- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "column_names": list(self.column_names),
            "alpha": [float(a) for a in self.alpha],
            "beta": [{"i": i, "j": j, "value": v} for (i, j), v in self.beta.items()],
            "omega": [{"i": i, "j": j, "q": q, "value": v} for (i, j, q), v in self.omega.items()],
            "sigma": [float(s) for s in self.sigma],
            "meta": _jsonable(self.meta),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MnmModel":
        beta = {(e["i"], e["j"]): e["value"] for e in d.get("beta", [])}
        omega = {(e["i"], e["j"], e["q"]): e["value"] for e in d.get("omega", [])}
        return cls(
            int(d["p"]),
            d["alpha"],
            beta,
            omega,
            d["sigma"],
            tuple(d.get("column_names", ())),
            dict(d.get("meta", {})),
        )

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MnmModel":
        return cls.from_dict(json.loads(text))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text; floats keep full (round-trip) precision."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def read_csv(path, header: bool = True) -> RawData:
    """Read a comma-separated numeric file into RawData.

    Missing or non-numeric cells are rejected with a DataError naming the
    offending row and column.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    names = ()
    if header:
        names = tuple(c.strip() for c in rows[0])
        rows = rows[1:]
    width = len(names) if header else len(rows[0])
    values = []
    for r_idx, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise DataError(f"{path}: row {r_idx} has {len(row)} fields, expected {width}")
        try:
            values.append([float(c) for c in row])
        except ValueError:
            bad = next(k for k, c in enumerate(row) if not _is_float(c))
            raise DataError(f"{path}: non-numeric value {row[bad]!r} at row {r_idx}, column {bad + 1}") from None
    if not values:
        raise DataError(f"{path}: no data rows")
    return RawData(np.asarray(values), names)


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def write_csv(path, values: np.ndarray, column_names: Sequence[str] | None = None) -> None:
    """Write a matrix with 17 significant digits per value."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if column_names is not None:
            w.writerow(column_names)
        for row in np.asarray(values):
            w.writerow([f"{v:.17g}" for v in row])
