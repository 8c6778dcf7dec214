import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from trajrecover.assignment import Assignment, AssignmentError, solve_min, solve_min_brute


def scipy_total(cost):
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].sum())


def test_identity_friendly_2x2():
    a = solve_min([[0.0, 1.0], [1.0, 0.0]])
    assert a.mapping == (0, 1)
    assert a.total_cost == 0.0


def test_all_equal_matrix_breaks_ties_lexicographically():
    a = solve_min(np.full((3, 3), 5.0))
    assert a.mapping == (0, 1, 2)
    assert a.total_cost == 15.0


def test_antidiagonal_preference():
    a = solve_min([[1.0, 2.0], [2.0, 1.0]])
    assert a.mapping == (0, 1)
    assert a.total_cost == 2.0


def test_brute_1x1():
    a = solve_min_brute([[7.0]])
    assert a.mapping == (0,)
    assert a.total_cost == 7.0


def test_brute_rejects_large():
    with pytest.raises(AssignmentError):
        solve_min_brute(np.zeros((11, 11)))


def test_input_validation():
    with pytest.raises(AssignmentError):
        solve_min(np.zeros((2, 3)))
    with pytest.raises(AssignmentError):
        solve_min([[1.0, -0.5], [0.0, 1.0]])
    with pytest.raises(AssignmentError):
        solve_min([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(AssignmentError):
        solve_min([[np.inf, 1.0], [0.0, 1.0]])
    with pytest.raises(AssignmentError):
        solve_min(np.zeros((0, 0)))


def test_random_6x6_matches_brute_force():
    rng = np.random.default_rng(123)
    for _ in range(50):
        cost = rng.uniform(0.0, 10.0, size=(6, 6))
        got = solve_min(cost)
        ref = solve_min_brute(cost)
        assert got.total_cost == pytest.approx(ref.total_cost, rel=1e-12)
        assert got.mapping == ref.mapping


def test_integer_ties_match_brute_force_mapping():
    # small integer ranges force many optimal ties; the lexicographic rule
    # must select the same permutation as the first-wins exhaustive scan
    rng = np.random.default_rng(42)
    for _ in range(300):
        n = int(rng.integers(1, 7))
        cost = rng.integers(0, 4, size=(n, n)).astype(float)
        got = solve_min(cost)
        ref = solve_min_brute(cost)
        assert got.total_cost == ref.total_cost
        assert got.mapping == ref.mapping


def test_duplicate_columns_match_brute_force_mapping():
    # attack matrices repeat whole columns (one per person in a cell)
    rng = np.random.default_rng(99)
    for _ in range(200):
        n = int(rng.integers(2, 8))
        base = rng.uniform(0.0, 5.0, size=(n, max(1, n // 2)))
        picks = rng.integers(0, base.shape[1], size=n)
        cost = base[:, picks]
        got = solve_min(cost)
        ref = solve_min_brute(cost)
        assert got.total_cost == pytest.approx(ref.total_cost, rel=1e-12, abs=1e-12)
        assert got.mapping == ref.mapping


def test_mapping_is_permutation():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 12))
        cost = rng.uniform(0.0, 100.0, size=(n, n))
        a = solve_min(cost)
        assert sorted(a.mapping) == list(range(n))


def test_total_cost_consistent_with_mapping():
    rng = np.random.default_rng(17)
    cost = rng.uniform(0.0, 10.0, size=(9, 9))
    a = solve_min(cost)
    assert a.total_cost == pytest.approx(cost[np.arange(9), list(a.mapping)].sum())


def test_row_shift_leaves_mapping_unchanged():
    rng = np.random.default_rng(31)
    for _ in range(50):
        n = int(rng.integers(2, 8))
        cost = rng.integers(0, 20, size=(n, n)).astype(float)
        before = solve_min(cost).mapping
        shifted = cost.copy()
        shifted[int(rng.integers(0, n))] += 7.0
        assert solve_min(shifted).mapping == before


def test_agrees_with_scipy_on_larger_instances():
    rng = np.random.default_rng(2024)
    for n in (15, 40, 80):
        cost = rng.uniform(0.0, 1000.0, size=(n, n))
        assert solve_min(cost).total_cost == pytest.approx(scipy_total(cost), rel=1e-12)


def test_assignment_is_frozen_value():
    a = Assignment((0, 1), 2.0)
    with pytest.raises(AttributeError):
        a.total_cost = 3.0
