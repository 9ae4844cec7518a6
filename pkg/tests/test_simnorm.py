import math
import random

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from patentmap import simnorm
from patentmap.comatrix import CooccMatrix
from patentmap.errors import UndefinedSimilarity
from patentmap.simnorm import cosine, jaccard, pearson, similarity_matrix, threshold_graph


def cosine_oracle(x, y):
    # direct textbook evaluation with plain loops
    num = 0.0
    sx = 0.0
    sy = 0.0
    for a, b in zip(x, y):
        num += a * b
        sx += a * a
        sy += b * b
    return num / (math.sqrt(sx) * math.sqrt(sy))


vec = st.lists(st.integers(0, 20), min_size=1, max_size=15)
fvec = st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=15)


def test_hand_values():
    assert jaccard([1, 1, 0], [1, 0, 1]) == 1 / 3
    assert cosine([1, 1, 0], [1, 0, 1]) == 0.5
    assert cosine([3, 4], [4, 3]) == pytest.approx(24 / 25, abs=1e-15)
    assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(3 / math.sqrt(28 / 3), abs=1e-15)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-15)


def test_cosine_ignores_shared_zeros_pearson_does_not():
    x, y = [1, 2, 0], [2, 1, 0]
    xp, yp = x + [0] * 5, y + [0] * 5
    assert cosine(x, y) == pytest.approx(cosine(xp, yp), abs=1e-15)
    assert pearson(x, y) != pytest.approx(pearson(xp, yp))


@pytest.mark.parametrize("f, x, y", [
    (cosine, [0, 0], [1, 2]),
    (pearson, [2, 2, 2], [1, 2, 3]),
    (jaccard, [0, 0], [0, 0]),
])
def test_undefined(f, x, y):
    with pytest.raises(UndefinedSimilarity):
        f(x, y)


def test_bad_inputs():
    with pytest.raises(ValueError):
        cosine([1, 2], [1])
    with pytest.raises(ValueError):
        jaccard([1, 2], [1, 0])
    with pytest.raises(ValueError):
        cosine([math.nan], [1])


def test_cosine_random_pairs_against_oracle():
    rng = random.Random(7)
    for _ in range(1000):
        n = rng.randint(1, 30)
        x = [rng.random() * rng.choice([1, 10, 1000]) for _ in range(n)]
        y = [rng.random() * rng.choice([1, 10, 1000]) for _ in range(n)]
        assert abs(cosine(x, y) - cosine_oracle(x, y)) <= 1e-12


@given(vec, vec, st.floats(0.01, 1000))
def test_cosine_scale_invariance(x, y, c):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    assume(any(x) and any(y))
    assert abs(cosine(x, y) - cosine([c * v for v in x], y)) <= 1e-12


@given(vec, vec, st.integers(0, 20))
def test_cosine_bounds_symmetry_padding(x, y, pad):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    assume(any(x) and any(y))
    c = cosine(x, y)
    assert 0.0 <= c <= 1.0 + 1e-15
    assert c == cosine(y, x)
    assert abs(c - cosine(x + [0] * pad, y + [0] * pad)) <= 1e-12


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=20))
def test_jaccard_at_most_cosine(pairs):
    x, y = [a for a, _ in pairs], [b for _, b in pairs]
    assume(any(x) and any(y))
    assert jaccard(x, y) <= cosine(x, y) + 1e-15


@given(fvec, fvec)
def test_pearson_range(x, y):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    assume(max(x) - min(x) > 1e-3 and max(y) - min(y) > 1e-3)
    assert -1 - 1e-12 <= pearson(x, y) <= 1 + 1e-12


def test_matrix_agrees_with_scalar_functions():
    rng = np.random.default_rng(3)
    rows = rng.integers(0, 4, size=(8, 12))
    for measure, f in [("cosine", cosine), ("pearson", pearson)]:
        m = similarity_matrix(rows, measure)
        for i in range(8):
            for j in range(8):
                assert m.values[i, j] == pytest.approx(f(rows[i], rows[j]), abs=1e-12)
    b = (rows > 1).astype(int)
    b[:, 0] = 1
    m = similarity_matrix(b, "jaccard")
    assert m.values[0, 1] == pytest.approx(jaccard(b[0], b[1]), abs=1e-15)


def test_matrix_undefined_rows_warn():
    m = similarity_matrix(np.array([[1, 2], [0, 0], [2, 1]]), "cosine", ["a", "b", "c"])
    assert m.values[1].tolist() == [0.0, 0.0, 0.0]
    assert m.values[0, 0] == 1.0
    assert len(m.warnings) == 1 and "'b'" in m.warnings[0]
    p = similarity_matrix(np.array([[1.5, 1.5, 1.5], [1, 2, 3]]), "pearson")
    assert p.values[0].tolist() == [0.0, 0.0] and p.warnings


def test_matrix_from_coocc_and_csv():
    co = CooccMatrix(["a", "b"], np.array([[2, 1], [1, 1]]))
    m = similarity_matrix(co)
    assert m.terms == ["a", "b"]
    assert m.to_csv().startswith("# measure=cosine\n,a,b\n")
    with pytest.raises(ValueError):
        similarity_matrix(co, "dice")


@given(st.lists(st.lists(st.integers(0, 5), min_size=4, max_size=4), min_size=2, max_size=8))
def test_matrix_symmetric_and_bounded(rows):
    m = similarity_matrix(np.array(rows), "cosine").values
    assert (m == m.T).all()
    assert (m >= 0).all() and (m <= 1).all()


def designed_similarity():
    # node e is isolated by design; c-d sits exactly on the threshold
    terms = ["a", "b", "c", "d", "e"]
    v = np.eye(5)
    for i, j, s in [(0, 1, 0.5), (1, 2, 0.2), (2, 3, 0.1), (0, 3, 0.0999999), (3, 4, 0.05), (0, 4, 0.09)]:
        v[i, j] = v[j, i] = s
    return simnorm.SimilarityMatrix(terms, v, "cosine")


def test_threshold_graph_designed_edges():
    g = threshold_graph(designed_similarity(), 0.1)
    assert g.nodes == ["a", "b", "c", "d"]
    assert {(g.nodes[i], g.nodes[j]) for i, j, _ in g.edges} == {("a", "b"), ("b", "c"), ("c", "d")}
    assert min(g.degrees()) >= 1


def test_threshold_extremes():
    sim = designed_similarity()
    assert len(threshold_graph(sim, math.inf)) == 0
    full = threshold_graph(sim, 0.0)
    assert len(full.edges) == 10
    with pytest.raises(ValueError):
        threshold_graph(sim, math.nan)


def test_threshold_on_counts_keeps_integer_weights():
    co = CooccMatrix(["a", "b", "c"], np.array([[5, 3, 0], [3, 4, 1], [0, 1, 2]]))
    g = threshold_graph(co, 2, {"a": 5, "b": 4, "c": 2})
    assert g.nodes == ["a", "b"] and g.edges == [(0, 1, 3)]
    assert g.frequencies == [5.0, 4.0]
    assert g.source_measure == "cooccurrence-document"


@given(st.lists(st.floats(0, 1), min_size=10, max_size=10), st.floats(0, 1))
def test_threshold_graph_properties(upper, tau):
    v = np.eye(5)
    iu = np.triu_indices(5, 1)
    v[iu] = upper
    v.T[iu] = upper
    g = threshold_graph(simnorm.SimilarityMatrix(list("abcde"), v, "cosine"), tau)
    assert all(d > 0 for d in g.degrees())
    assert all(w >= tau for _, _, w in g.edges)
    expected = sum(1 for u in upper if u >= tau)
    assert len(g.edges) == expected
