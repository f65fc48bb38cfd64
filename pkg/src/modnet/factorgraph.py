"""Factor-graph views of moderated network models with DOT and JSON export.

Every interaction becomes a factor node connected to the variables it
involves. Node ids are ``v<k>`` for variables and ``f<i>_<j>[_<q>]`` for
factors.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import MnmModel, canonical


@dataclass(frozen=True)
class Factor:
    order: int
    members: tuple
    weight: float
    sign: int

    @property
    def id(self) -> str:
        return "f" + "_".join(str(m) for m in self.members)


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    weight: float
    sign: int
    directed: bool = False


@dataclass(frozen=True)
class FactorGraph:
    variable_nodes: tuple
    factor_nodes: tuple
    edges: tuple
    pairwise_as_edge: bool = False
    nodewise: bool = False

    def incident(self, factor: Factor) -> list:
        return [e for e in self.edges if e.source == factor.id]


# nodewise graphs share the structure; every edge points at a response node
NodewiseFactorGraph = FactorGraph


def _sign(w: float) -> int:
    return int(np.sign(w))


def _factor_edges(f: Factor, weights=None, directed=False):
    weights = weights or {v: f.weight for v in f.members}
    return [Edge(f.id, f"v{v}", weights[v], _sign(weights[v]), directed)
            for v in f.members if weights.get(v, 0.0) != 0.0]


def to_factor_graph(model: MnmModel, pairwise_as_edge: bool = False) -> FactorGraph:
    """One order-2 factor per nonzero pairwise weight, one order-3 per 3-way.

    With ``pairwise_as_edge`` the order-2 factors are replaced by plain
    variable-variable edges.
    """
    factors, edges = [], []
    items = [(k, v) for k, v in model.beta.items() if v != 0.0]
    items += [(k, v) for k, v in model.omega.items() if v != 0.0]
    for key, w in sorted(items):
        if len(key) == 2 and pairwise_as_edge:
            edges.append(Edge(f"v{key[0]}", f"v{key[1]}", w, _sign(w)))
            continue
        f = Factor(len(key), key, w, _sign(w))
        factors.append(f)
        edges.extend(_factor_edges(f))
    return FactorGraph(tuple(model.column_names), tuple(factors), tuple(edges), pairwise_as_edge, False)


def to_nodewise_factor_graph(fits, column_names: Sequence[str] = (), pairwise_as_edge: bool = False) -> FactorGraph:
    """Factor graph of unaggregated nodewise estimates.

    Each estimate becomes an edge directed at the response node of the
    regression that produced it; zero estimates are left out. The factor's
    weight is the mean of its nonzero estimates.
    """
    p = len(fits)
    per_key = {}
    for f in fits:
        for key, v in f.estimates().items():
            if v != 0.0:
                per_key.setdefault(key, {})[f.node] = v
    factors, edges = [], []
    for key in sorted(per_key):
        ests = per_key[key]
        w = float(np.mean(list(ests.values())))
        if len(key) == 2 and pairwise_as_edge:
            for resp in key:
                if resp in ests:
                    other = key[0] if resp == key[1] else key[1]
                    edges.append(Edge(f"v{other}", f"v{resp}", ests[resp], _sign(ests[resp]), True))
            continue
        fac = Factor(len(key), key, w, _sign(w))
        factors.append(fac)
        edges.extend(_factor_edges(fac, ests, directed=True))
    names = tuple(column_names) or tuple(f"V{k + 1}" for k in range(p))
    return FactorGraph(names, tuple(factors), tuple(edges), pairwise_as_edge, True)


# ---------------------------------------------------------------- export


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _quote(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: FactorGraph) -> str:
    """Graphviz DOT text.

    Variables are circles, factors are squares labeled with their order.
    Edge width is ``1 + 4 |w| / max |w|``; green for positive, red for
    negative weights.
    """
    directed = graph.nodewise
    arrow = "->" if directed else "--"
    wmax = max((abs(e.weight) for e in graph.edges), default=0.0)
    lines = [("digraph" if directed else "graph") + " mnm {"]
    for k, name in enumerate(graph.variable_nodes, start=1):
        lines.append(f"  v{k} [label={_quote(name)}, shape=circle];")
    for f in graph.factor_nodes:
        fill = "#d62728" if f.order == 2 else "#1f77b4"
        lines.append(f"  {f.id} [label=\"{f.order}\", shape=square, style=filled, "
                     f"fillcolor=\"{fill}\", tooltip={_quote(_fmt(f.weight))}];")
    for e in graph.edges:
        width = 1.0 + 4.0 * abs(e.weight) / wmax if wmax > 0 else 1.0
        color = "green" if e.sign > 0 else "red" if e.sign < 0 else "gray"
        lines.append(f"  {e.source} {arrow} {e.target} [penwidth={_fmt(width)}, color={color}, "
                     f"label={_quote(_fmt(e.weight))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_dict(graph: FactorGraph) -> dict:
    return {
        "nodewise": graph.nodewise,
        "pairwise_as_edge": graph.pairwise_as_edge,
        "variables": list(graph.variable_nodes),
        "factors": [{"id": f.id, "order": f.order, "members": list(f.members), "weight": f.weight, "sign": f.sign}
                    for f in graph.factor_nodes],
        "edges": [{"source": e.source, "target": e.target, "weight": e.weight, "sign": e.sign,
                   "directed": e.directed} for e in graph.edges],
    }


def export_json(graph: FactorGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2) + "\n"


def import_json(text: str) -> FactorGraph:
    d = json.loads(text)
    factors = tuple(Factor(int(f["order"]), canonical(f["members"]), float(f["weight"]), int(f["sign"]))
                    for f in d["factors"])
    edges = tuple(Edge(e["source"], e["target"], float(e["weight"]), int(e["sign"]), bool(e["directed"]))
                  for e in d["edges"])
    return FactorGraph(tuple(d["variables"]), factors, edges, bool(d["pairwise_as_edge"]), bool(d["nodewise"]))
