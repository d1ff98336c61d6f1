import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mosh.pareto import dominates, hypervolume, hypervolume_mc, nondominated_filter, nondominated_mask


def brute_mask(Y):
    return np.array([not any(dominates(Y[j], Y[i]) for j in range(len(Y)) if j != i) for i in range(len(Y))])


def test_dominates():
    assert dominates([1, 1], [0, 1])
    assert not dominates([1, 1], [1, 1])
    assert not dominates([1, 0], [0, 1])


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 30), st.integers(2, 3)), elements=st.integers(0, 5).map(float)))
def test_mask_matches_brute_force(Y):
    assert np.array_equal(nondominated_mask(Y), brute_mask(Y))


def test_filter_keeps_inputs():
    Y = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    X = np.arange(3)[:, None]
    fs = nondominated_filter(Y, X)
    assert fs.front.tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_staircase_example():
    assert hypervolume([[0.5, 1.0], [1.0, 0.5]], [0.0, 0.0]) == 0.75


def test_points_below_reference_ignored():
    assert hypervolume([[-1.0, 2.0], [0.5, 0.5]], [0.0, 0.0]) == 0.25
    assert hypervolume(np.empty((0, 2)), [0.0, 0.0]) == 0.0


def test_exact_matches_inclusion_exclusion(rng):
    for _ in range(20):
        P = rng.random((4, 2))
        total = 0.0
        for r in range(1, 5):
            for sub in itertools.combinations(P, r):
                total += (-1) ** (r + 1) * np.prod(np.min(sub, axis=0))
        assert hypervolume(P, [0, 0]) == pytest.approx(total, abs=1e-12)


def test_three_objectives_use_monte_carlo():
    hv = hypervolume([[1.0, 1.0, 1.0]], [0, 0, 0])
    assert hv == pytest.approx(1.0, abs=1e-12)
    assert hypervolume_mc([[0.5, 0.5, 1.0]], [0, 0, 0]) == pytest.approx(0.25, rel=0.02)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (6, 2), elements=st.floats(0, 1)), arrays(float, (2,), elements=st.floats(0, 1)))
def test_adding_a_point_never_shrinks(P, extra):
    assert hypervolume(np.vstack([P, extra]), [0, 0]) >= hypervolume(P, [0, 0]) - 1e-12
