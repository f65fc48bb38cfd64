import itertools

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from modnet.core import MnmModel
from modnet.estimator import NodewiseFit, aggregate
from modnet.factorgraph import (
    export_dot,
    export_json,
    import_json,
    to_factor_graph,
    to_nodewise_factor_graph,
)
from modnet.simgen import random_mnm
from modnet.solver import LassoFit


def nodewise(node, terms, coefs):
    coefs = np.asarray(coefs, dtype=float)
    fit = LassoFit(0.1, coefs, 0.0, 1.0, int(np.count_nonzero(coefs)), 1, True, coefs)
    return NodewiseFit(node, fit, tuple(terms), ())


def three_node_fits(a, b, c):
    """Regressions on nodes 1..3 with mains and the single product term."""
    return [
        nodewise(1, [(2,), (3,), (2, 3)], [0.0, 0.0, a]),
        nodewise(2, [(1,), (3,), (1, 3)], [0.0, 0.0, b]),
        nodewise(3, [(1,), (2,), (1, 2)], [0.0, 0.0, c]),
    ]


def test_empty_model_has_only_variables():
    g = to_factor_graph(MnmModel.empty(4))
    assert len(g.variable_nodes) == 4 and not g.factor_nodes and not g.edges
    dot = export_dot(g)
    assert dot.count("shape=circle") == 4
    assert "--" not in dot


def test_two_pairwise_one_threeway():
    m = MnmModel(3, np.zeros(3), {(1, 2): 0.3, (2, 3): -0.2}, {(1, 2, 3): 0.1}, np.ones(3))
    g = to_factor_graph(m)
    assert sorted(f.order for f in g.factor_nodes) == [2, 2, 3]
    assert len(g.edges) == 7
    h = to_factor_graph(m, pairwise_as_edge=True)
    assert [f.order for f in h.factor_nodes] == [3]
    assert len(h.edges) == 5


def test_generated_model_factor_counts():
    g = to_factor_graph(random_mnm(4).model)
    assert sum(f.order == 2 for f in g.factor_nodes) == 4
    assert sum(f.order == 3 for f in g.factor_nodes) == 4


def test_nodewise_keeps_disagreeing_signs():
    g = to_nodewise_factor_graph(three_node_fits(0.19, 0.21, -0.09))
    assert len(g.factor_nodes) == 1
    weights = {e.target: e.weight for e in g.edges}
    assert weights == {"v1": 0.19, "v2": 0.21, "v3": -0.09}
    assert all(e.directed for e in g.edges)
    assert "digraph" in export_dot(g) and "->" in export_dot(g)


def test_nodewise_omits_zero_estimates():
    g = to_nodewise_factor_graph(three_node_fits(0.19, 0.0, 0.2))
    assert {e.target for e in g.edges} == {"v1", "v3"}


def test_equal_estimates_match_aggregated_graph():
    fits = three_node_fits(0.15, 0.15, 0.15)
    agg = to_factor_graph(aggregate(fits, "and"))
    nw = to_nodewise_factor_graph(fits)
    assert [f.weight for f in nw.factor_nodes] == [f.weight for f in agg.factor_nodes]
    assert [(e.source, e.target, e.weight) for e in nw.edges] == [(e.source, e.target, e.weight) for e in agg.edges]


def test_edge_width_and_colour():
    m = MnmModel(3, np.zeros(3), {(1, 2): 0.4, (2, 3): -0.2}, {}, np.ones(3))
    dot = export_dot(to_factor_graph(m, pairwise_as_edge=True))
    assert "v1 -- v2 [penwidth=5, color=green" in dot
    assert "v2 -- v3 [penwidth=3, color=red" in dot


def test_dot_is_deterministic():
    m = random_mnm(8).model
    assert export_dot(to_factor_graph(m)) == export_dot(to_factor_graph(MnmModel.from_json(m.to_json())))


def test_edge_count_invariant():
    m = random_mnm(12).model
    g = to_factor_graph(m)
    assert len(g.edges) == 2 * len(m.nonzero_beta()) + 3 * len(m.nonzero_omega())


graph_models = st.integers(3, 6).flatmap(lambda p: st.builds(
    lambda b, o: MnmModel(p, np.zeros(p), b, o, np.ones(p)),
    st.dictionaries(st.sampled_from(list(itertools.combinations(range(1, p + 1), 2))),
                    st.floats(-1, 1, allow_nan=False).filter(lambda v: v != 0), max_size=6),
    st.dictionaries(st.sampled_from(list(itertools.combinations(range(1, p + 1), 3))),
                    st.floats(-1, 1, allow_nan=False).filter(lambda v: v != 0), max_size=4),
))


@settings(max_examples=80, deadline=None)
@given(graph_models, st.booleans())
def test_json_round_trip_preserves_graph(model, as_edge):
    g = to_factor_graph(model, as_edge)
    back = import_json(export_json(g))
    assert back == g
    assert export_dot(back) == export_dot(g)
    assert export_json(back) == export_json(g)
