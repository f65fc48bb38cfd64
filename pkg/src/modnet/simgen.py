"""Data-generating models used in the simulation studies."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import MnmModel

UNMODERATED = "unmoderated"
PARTIAL = "partially_moderated"
FULL = "fully_moderated"

EFFECT = 0.2


@dataclass(frozen=True)
class GeneratingModelInfo:
    model: MnmModel
    edge_types: dict  # (i, j) -> edge type
    moderator: int
    edge_moderators: dict = field(default_factory=dict)  # overrides ``moderator`` per edge

    def moderator_of(self, edge) -> int:
        return self.edge_moderators.get(edge, self.moderator)

    def to_dict(self) -> dict:
        d = self.model.to_dict()
        d["meta"] = dict(d["meta"])
        d["meta"]["edge_types"] = [
            {"i": i, "j": j, "type": t, "moderator": self.moderator_of((i, j))}
            for (i, j), t in sorted(self.edge_types.items())
        ]
        d["meta"]["moderator"] = self.moderator
        return d


def _build(p, edge_types, moderator, seed=None, kind="random"):
    beta, omega = {}, {}
    for (i, j), t in edge_types.items():
        if t in (UNMODERATED, PARTIAL):
            beta[(i, j)] = EFFECT
        if t in (PARTIAL, FULL):
            omega[tuple(sorted((i, j, moderator)))] = EFFECT
    meta = {"generator": kind}
    if seed is not None:
        meta["seed"] = int(seed)
    model = MnmModel(p, np.zeros(p), beta, omega, np.ones(p), meta=meta)
    return GeneratingModelInfo(model, dict(sorted(edge_types.items())), moderator)


def random_mnm(seed: int, p_graph: int = 12, n_edges: int = 6, max_degree: int = 2,
               max_draws: int = 10**6) -> GeneratingModelInfo:
    """Random 13-variable model with one moderator.

    Six distinct edges are drawn uniformly among nodes 1..12; the whole draw
    is repeated until every node has degree at most 2. Two edges each become
    unmoderated, partially moderated and fully moderated (by node 13). All
    nonzero parameters equal 0.2; intercepts are 0 and conditional SDs 1.
    """
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(1, p_graph + 1), 2))
    for _ in range(max_draws):
        idx = rng.choice(len(pairs), size=n_edges, replace=False)
        edges = [pairs[i] for i in idx]
        deg = np.zeros(p_graph + 1, dtype=int)
        for i, j in edges:
            deg[i] += 1
            deg[j] += 1
        if deg.max() <= max_degree:
            break
    else:
        raise RuntimeError("edge resampling budget exhausted")
    labels = [UNMODERATED, UNMODERATED, PARTIAL, PARTIAL, FULL, FULL]
    labels = [labels[k] for k in rng.permutation(n_edges)]
    return _build(p_graph + 1, dict(zip(edges, labels)), p_graph + 1, seed)


def isolated_types_model() -> GeneratingModelInfo:
    """Fixed 8-variable model with each parameter type in its own component.

    7-8 unmoderated edge; 1-2-3 a pure 3-way interaction (1-2 fully
    moderated by 3 and so on); 5-6 an edge partially moderated by 4.
    """
    beta = {(7, 8): EFFECT, (5, 6): EFFECT}
    omega = {(1, 2, 3): EFFECT, (4, 5, 6): EFFECT}
    model = MnmModel(8, np.zeros(8), beta, omega, np.ones(8), meta={"generator": "isolated"})
    types = {(2, 3): FULL, (5, 6): PARTIAL, (7, 8): UNMODERATED}
    return GeneratingModelInfo(model, types, 1, {(5, 6): 4})


def uncorrelated_neighbors_ggm(k: int, p: int = 20) -> MnmModel:
    """GGM where node 1 has ``k`` mutually unconnected neighbors 2..k+1."""
    if k not in (1, 2, 3, 4):
        raise ValueError("k must be in 1..4")
    beta = {(1, j): EFFECT for j in range(2, k + 2)}
    return MnmModel(p, np.zeros(p), beta, {}, np.ones(p), meta={"generator": f"neighbors-{k}"})
