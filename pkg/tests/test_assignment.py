import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from oracles import min_assignment_cost, ranked_maps, subsets_ranked

from boosted_glmb.assignment import (k_best_subsets, optimal_assignment, ranked_assignment,
                                     ranked_assignment_log)


def test_single_row_ordering():
    got = ranked_assignment(np.array([[0.1, 0.6, 0.3]]), 3)
    assert [int(t[0]) for t, _ in got] == [1, 2, 0]
    np.testing.assert_allclose([w for _, w in got], [0.6, 0.3, 0.1])


@pytest.mark.parametrize("seed", range(10))
def test_two_by_three_is_exhaustive(seed):
    S = np.random.default_rng(seed).random((2, 3))
    got = ranked_assignment(S, 7)
    want = ranked_maps(S)
    assert len(got) == len(want) == 7
    np.testing.assert_allclose([w for _, w in got], [w for _, w in want], rtol=1e-12)
    assert {tuple(t) for t, _ in got} == {t for t, _ in want}


@pytest.mark.parametrize("n, m", [(1, 3), (3, 2), (3, 3), (4, 1), (2, 5)])
def test_best_map_matches_optimal_assignment(rng, n, m):
    S = rng.random((n, m + 1)) + 0.01
    (theta, w), = ranked_assignment(S, 1)
    # miss columns become a private dummy per row
    C = np.full((n, m + n), np.inf)
    C[:, :m] = -np.log(S[:, 1:])
    C[np.arange(n), m + np.arange(n)] = -np.log(S[:, 0])
    _, _, total = optimal_assignment(C)
    assert np.log(w) == pytest.approx(-total, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 4), st.integers(0, 4), st.integers(1, 30), st.data())
def test_ranked_matches_brute_force(n, m, K, data):
    S = data.draw(arrays(float, (n, m + 1), elements=st.sampled_from([0.0, 0.05, 0.3, 0.7, 1.0])
                         | st.floats(0.01, 1.0)))
    got = ranked_assignment(S, K)
    want = ranked_maps(S)
    assert len(got) == min(K, len(want))
    np.testing.assert_allclose([w for _, w in got], [w for _, w in want[:len(got)]], rtol=1e-9)
    thetas = [tuple(int(j) for j in t) for t, _ in got]
    assert len(set(thetas)) == len(thetas)
    for th, w in zip(thetas, got):
        assert np.prod(S[np.arange(n), list(th)]) == pytest.approx(w[1], rel=1e-9)


def test_ranked_empty_rows():
    thetas, lw = ranked_assignment_log(np.zeros((0, 3)), 5)
    assert thetas.shape == (1, 0) and lw[0] == 0.0


def test_ranked_rejects_bad_scores():
    with pytest.raises(ValueError):
        ranked_assignment(np.array([[-1.0, 1.0]]), 1)
    with pytest.raises(ValueError):
        ranked_assignment(np.array([[1.0]]), 0)


def test_optimal_assignment_diagonal():
    rows, cols, total = optimal_assignment(np.array([[0.0, 9.0], [9.0, 0.0]]))
    assert list(zip(rows, cols)) == [(0, 0), (1, 1)] and total == 0.0


def test_optimal_assignment_ties():
    _, cols, total = optimal_assignment(np.full((3, 3), 2.5))
    assert sorted(cols) == [0, 1, 2] and total == pytest.approx(7.5)


@pytest.mark.parametrize("shape", [(1, 1), (2, 3), (3, 2), (4, 4), (5, 3), (6, 6)])
def test_optimal_assignment_brute_force(rng, shape):
    for _ in range(10):
        C = rng.random(shape) * rng.choice([1.0, 100.0])
        rows, cols, total = optimal_assignment(C)
        assert len(rows) == min(shape)
        assert len(set(rows)) == len(set(cols)) == min(shape)
        assert C[rows, cols].sum() == pytest.approx(total)
        assert total == pytest.approx(min_assignment_cost(C), abs=1e-10)


def test_optimal_assignment_empty():
    assert optimal_assignment(np.zeros((0, 3)))[2] == 0.0


@pytest.mark.parametrize("n", [0, 1, 3, 6])
def test_k_best_subsets_brute_force(rng, n):
    p = rng.uniform(0.05, 0.95, n)
    lin, lout = np.log(p), np.log1p(-p)
    want = subsets_ranked(lin, lout)
    masks, lw = k_best_subsets(lin, lout, 100)
    assert len(masks) == len(want)
    np.testing.assert_allclose(lw, [w for _, w in want], atol=1e-12)
    assert len({tuple(m) for m in masks}) == len(masks)
    np.testing.assert_allclose(np.logaddexp.reduce(lw), 0.0, atol=1e-12)


def test_k_best_subsets_forced_items():
    # a certain item (log_out = -inf) is always on, an impossible one always off
    lin = np.array([0.0, -np.inf, np.log(0.3)])
    lout = np.array([-np.inf, 0.0, np.log(0.7)])
    masks, lw = k_best_subsets(lin, lout, 10)
    assert masks.tolist() == [[True, False, False], [True, False, True]]
    np.testing.assert_allclose(np.exp(lw), [0.7, 0.3])


def test_k_best_subsets_truncates():
    masks, _ = k_best_subsets(np.log([0.5] * 4), np.log([0.5] * 4), 5)
    assert len(masks) == 5
    assert len({tuple(m) for m in masks}) == 5
    assert all(len(m) == 4 for m in itertools.islice(masks, 5))
