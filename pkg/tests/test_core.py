import itertools
import json
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modnet.core import (
    DataError,
    MnmModel,
    ModeratorSet,
    RawData,
    as_moderators,
    canonical,
    count_terms,
    nodewise_param_count,
    predictor_terms,
    read_csv,
    standardize,
    write_csv,
)


def brute_force_counts(p, mods):
    pairs = sum(1 for i in range(1, p + 1) for j in range(i + 1, p + 1))
    triples = 0
    for i in range(1, p + 1):
        for j in range(i + 1, p + 1):
            for q in range(j + 1, p + 1):
                if i in mods or j in mods or q in mods:
                    triples += 1
    return pairs, triples


def brute_force_predictors(p, mods, s):
    count = p - 1
    for i in range(1, p + 1):
        for j in range(i + 1, p + 1):
            if s in (i, j):
                continue
            if i in mods or j in mods or s in mods:
                count += 1
    return count


# ---------------------------------------------------------------- standardize


def test_standardize_three_point_column():
    x = np.array([[1.0, 0.3, 5.0], [2.0, 0.1, 7.0], [3.0, 0.8, 6.5]])
    z = standardize(RawData(x))
    np.testing.assert_allclose(z.values[:, 0], [-1.0, 0.0, 1.0], atol=1e-12)
    assert z.means[0] == pytest.approx(2.0)
    assert z.sds[0] == pytest.approx(1.0)


def test_standardize_is_idempotent(rng):
    z1 = standardize(RawData(rng.normal(3, 2, size=(50, 4))))
    z2 = standardize(RawData(z1.values))
    np.testing.assert_allclose(z2.values, z1.values, atol=1e-12)
    np.testing.assert_allclose(z2.means, 0, atol=1e-12)
    np.testing.assert_allclose(z2.sds, 1, atol=1e-12)


def test_constant_column_names_its_index():
    x = np.column_stack([np.arange(5.0), np.full(5, 5.0), np.arange(5.0) ** 2])
    with pytest.raises(DataError, match="zero variance, column 2"):
        standardize(RawData(x))


def test_raw_data_rejects_non_finite_and_tiny_shapes():
    with pytest.raises(DataError, match="row 2, column 1"):
        RawData(np.array([[1.0, 2, 3], [np.nan, 1, 2], [0, 0, 1]]))
    with pytest.raises(DataError):
        RawData(np.ones((5, 2)))
    with pytest.raises(DataError):
        RawData(np.ones((1, 4)))


def test_standardized_arrays_are_read_only(rng):
    z = standardize(rng.normal(size=(10, 3)))
    with pytest.raises(ValueError):
        z.values[0, 0] = 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 40), st.integers(3, 6), st.integers(0, 2**31 - 1))
def test_standardize_round_trip(n, p, seed):
    r = np.random.default_rng(seed)
    x = r.normal(r.uniform(-5, 5, size=p), r.uniform(0.1, 10, size=p), size=(n, p))
    z = standardize(RawData(x))
    np.testing.assert_allclose(z.values.mean(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose(z.values.std(axis=0, ddof=1), 1, atol=1e-10)
    np.testing.assert_allclose(z.unstandardize(), x, rtol=1e-10, atol=1e-9)


# ---------------------------------------------------------------- counting


@pytest.mark.parametrize("p, mods, expected", [
    (10, "all", (45, 120)),
    (3, "all", (3, 1)),
    (13, (13,), (78, 66)),
])
def test_count_terms_examples(p, mods, expected):
    got = count_terms(p, as_moderators(mods, p))
    assert got == expected
    assert got == brute_force_counts(p, set(as_moderators(mods, p).members))


def test_ten_variable_total_is_165():
    assert sum(count_terms(10, ModeratorSet.all(10))) == 165


@pytest.mark.parametrize("p", range(3, 16))
def test_all_moderators_count_formula(p):
    assert count_terms(p, ModeratorSet.all(p)) == (comb(p, 2), comb(p, 3))


@settings(max_examples=80, deadline=None)
@given(st.integers(3, 12).flatmap(lambda p: st.tuples(st.just(p), st.sets(st.integers(1, p)))))
def test_count_terms_matches_enumeration(args):
    p, mods = args
    assert count_terms(p, ModeratorSet(tuple(mods))) == brute_force_counts(p, mods)
    for s in range(1, p + 1):
        assert nodewise_param_count(p, ModeratorSet(tuple(mods)), s) == brute_force_predictors(p, mods, s)


@pytest.mark.parametrize("p, mods, s, expected", [
    (20, "all", 1, 190),
    (20, "all", 17, 190),
    (13, (13,), 13, 78),
    (13, (13,), 5, 23),
])
def test_nodewise_param_count_examples(p, mods, s, expected):
    assert nodewise_param_count(p, as_moderators(mods, p), s) == expected


def test_predictor_terms_order_and_exclusion():
    terms = predictor_terms(5, as_moderators((5,), 5), 2)
    mains = [t for t in terms if len(t) == 1]
    prods = [t for t in terms if len(t) == 2]
    assert terms == mains + prods
    assert mains == [(1,), (3,), (4,), (5,)]
    assert prods == [(1, 5), (3, 5), (4, 5)]
    assert all(2 not in t for t in terms)


def test_moderator_validation():
    with pytest.raises(ValueError, match="out of range"):
        as_moderators((0,), 4)
    assert as_moderators(None, 4).members == ()
    assert as_moderators("ALL", 4).members == (1, 2, 3, 4)
    assert as_moderators(3, 4).members == (3,)


def test_canonical_rejects_repeats():
    assert canonical((5, 2, 3)) == (2, 3, 5)
    with pytest.raises(ValueError):
        canonical((2, 2, 3))


# ---------------------------------------------------------------- model


def test_model_rejects_noncanonical_keys():
    with pytest.raises(ValueError):
        MnmModel(3, np.zeros(3), {(2, 1): 0.1}, {}, np.ones(3))
    with pytest.raises(ValueError):
        MnmModel(3, np.zeros(3), {}, {(1, 2, 4): 0.1}, np.ones(3))
    with pytest.raises(ValueError):
        MnmModel(3, np.zeros(3), {}, {}, np.array([1.0, 0.0, 1.0]))


def test_get_accepts_any_index_order():
    m = MnmModel(4, np.zeros(4), {(1, 3): 0.4}, {(2, 3, 4): -0.1}, np.ones(4))
    assert m.get((3, 1)) == 0.4
    assert m.get((4, 2, 3)) == -0.1
    assert m.get((1, 2)) == 0.0


model_strategy = st.integers(3, 7).flatmap(lambda p: st.builds(
    lambda b, o, a, s: MnmModel(p, a, b, o, s),
    st.dictionaries(st.sampled_from(list(itertools.combinations(range(1, p + 1), 2))),
                    st.floats(-1, 1, allow_nan=False), max_size=5),
    st.dictionaries(st.sampled_from(list(itertools.combinations(range(1, p + 1), 3))),
                    st.floats(-1, 1, allow_nan=False), max_size=5),
    st.lists(st.floats(-2, 2, allow_nan=False), min_size=p, max_size=p),
    st.lists(st.floats(0.1, 3, allow_nan=False), min_size=p, max_size=p),
))


@settings(max_examples=80, deadline=None)
@given(model_strategy)
def test_json_round_trip_is_exact(model):
    text = model.to_json()
    back = MnmModel.from_json(text)
    assert back == model
    assert back.to_json() == text


def test_json_layout():
    m = MnmModel(3, np.zeros(3), {(1, 2): 0.2}, {(1, 2, 3): 0.1}, np.ones(3), meta={"rule": "AND"})
    d = json.loads(m.to_json())
    assert set(d) == {"p", "column_names", "alpha", "beta", "omega", "sigma", "meta"}
    assert d["beta"] == [{"i": 1, "j": 2, "value": 0.2}]
    assert d["omega"] == [{"i": 1, "j": 2, "q": 3, "value": 0.1}]


def test_relabel_moves_parameters():
    m = MnmModel(4, np.arange(4.0), {(1, 2): 0.5}, {(1, 2, 3): 0.3}, np.ones(4))
    r = m.relabel([4, 3, 2, 1])
    assert r.beta == {(3, 4): 0.5}
    assert r.omega == {(2, 3, 4): 0.3}
    np.testing.assert_array_equal(r.alpha, [3.0, 2.0, 1.0, 0.0])


# ---------------------------------------------------------------- csv


def test_csv_round_trip(tmp_path, rng):
    x = rng.normal(size=(7, 3))
    path = tmp_path / "d.csv"
    write_csv(path, x, ["a", "b", "c"])
    raw = read_csv(path)
    assert raw.column_names == ("a", "b", "c")
    np.testing.assert_array_equal(raw.values, x)
    write_csv(path, x)
    np.testing.assert_array_equal(read_csv(path, header=False).values, x)


def test_csv_reports_bad_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n4,x,6\n7,8,9\n")
    with pytest.raises(DataError, match="row 3, column 2"):
        read_csv(path)
    path.write_text("a,b,c\n1,2,3\n4,,6\n")
    with pytest.raises(DataError):
        read_csv(path)


# ---------------------------------------------------------------- centering


def _cor(a, b):
    return float(np.corrcoef(a, b)[0, 1])


def test_product_uncorrelated_with_centered_independent_factors():
    r = np.random.default_rng(1)
    x = r.normal(size=10000)
    y = r.normal(size=10000)
    x, y = x - x.mean(), y - y.mean()
    assert abs(_cor(x, x * y)) < 0.05
    assert abs(_cor(y, x * y)) < 0.05


def test_product_correlated_for_skewed_dependent_factors():
    r = np.random.default_rng(2)
    u = r.exponential(size=10000)
    x = u + r.exponential(size=10000)
    y = u + r.exponential(size=10000)
    x, y = x - x.mean(), y - y.mean()
    assert abs(_cor(x, x * y)) > 0.1


def test_uncentered_product_is_collinear_with_factor():
    r = np.random.default_rng(3)
    x = r.normal(5, 1, size=10000)
    y = r.normal(5, 1, size=10000)
    assert _cor(x, x * y) > 0.5
