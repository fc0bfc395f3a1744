import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_biht.adversary import (
    ENUMERATION_GUARD,
    STRATEGIES,
    CorruptionBudget,
    apply_pattern,
    corrupt,
    count_patterns,
    exhaustive_worst_case,
    one_step_error,
)
from robust_biht.biht import biht_step
from robust_biht.ensemble import clean_responses, sample_gaussian_matrix, sample_sparse_unit
from robust_biht.errors import InvalidArgument, ResourceError
from robust_biht.linops import sphere_distance


def _context(seed, m=12, n=6, k=2):
    A = sample_gaussian_matrix(m, n, seed).rows
    x = sample_sparse_unit(n, k, seed + 1).dense()
    x_prev = sample_sparse_unit(n, k, seed + 2).dense()
    return {"A": A, "x": x, "x_prev": x_prev, "k": k}


@pytest.mark.parametrize(
    "tau, m, expected",
    [(0.1, 10, 1), (0.05, 100, 5), (0.07, 100, 7), (0.3, 10, 3), (0.01, 50, 1), (1.0, 4, 4)],
)
def test_budget_is_ceiling_of_tau_m(tau, m, expected):
    assert CorruptionBudget(tau, m).budget == expected


@pytest.mark.parametrize("tau", [0.0, -0.1, 1.5])
def test_budget_rejects_bad_tau(tau):
    with pytest.raises(InvalidArgument):
        CorruptionBudget(tau, 10)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 30),
    st.floats(0.01, 1.0),
    st.sampled_from(["random", "min_margin", "estimate_aligned"]),
    st.integers(0, 2**32),
)
def test_flip_count_within_budget(m, tau, strategy, seed):
    ctx = _context(seed % 1000, m=m)
    clean = clean_responses(ctx["A"], ctx["x"])
    budget = CorruptionBudget(tau, m)
    y, pattern = corrupt(clean, budget, strategy, ctx, seed)
    flips = int(np.count_nonzero(y != clean))
    assert flips == len(pattern)
    assert flips <= math.ceil(tau * m + 1e-9)
    assert set(np.flatnonzero(y != clean).tolist()) == set(pattern.flipped)


def test_exhaustive_flip_count_within_budget():
    for seed in range(10):
        ctx = _context(seed, m=8)
        clean = clean_responses(ctx["A"], ctx["x"])
        y, pattern = corrupt(clean, CorruptionBudget(0.25, 8), "exhaustive", ctx)
        assert 1 <= np.count_nonzero(y != clean) <= 2


def test_random_flips_exactly_budget_and_is_seeded():
    clean = np.ones(50, dtype=np.int8)
    y1, p1 = corrupt(clean, CorruptionBudget(0.1, 50), "random", seed=3)
    y2, p2 = corrupt(clean, CorruptionBudget(0.1, 50), "random", seed=3)
    assert len(p1) == 5 and p1 == p2 and np.array_equal(y1, y2)


def test_min_margin_flips_smallest_margin():
    A = np.array([[10.0, 0.0], [0.1, 0.0]])
    ctx = {"A": A, "x": np.array([1.0, 0.0])}
    clean = clean_responses(A, ctx["x"])
    y, pattern = corrupt(clean, CorruptionBudget(0.5, 2), "min_margin", ctx)
    assert pattern.flipped == (1,)
    assert y.tolist() == [1, -1]


def test_estimate_aligned_only_flips_agreeing_positions():
    A = np.array([[1.0, 0.0], [0.05, -1.0], [0.2, 1.0]])
    x = np.array([1.0, 0.0])
    x_prev = np.array([0.0, 1.0])
    clean = clean_responses(A, x)  # (+, +, +)
    # sgn(A x_prev) = (+, -, +): row 1 disagrees and is skipped despite its small margin
    _, pattern = corrupt(clean, CorruptionBudget(0.3, 3), "estimate_aligned", {"A": A, "x": x, "x_prev": x_prev})
    assert pattern.flipped == (2,)


def test_strategy_names_accept_dashes():
    ctx = _context(1)
    clean = clean_responses(ctx["A"], ctx["x"])
    a = corrupt(clean, CorruptionBudget(0.2, 12), "min-margin", ctx)[1]
    b = corrupt(clean, CorruptionBudget(0.2, 12), "min_margin", ctx)[1]
    assert a == b


def test_missing_context_and_unknown_strategy():
    clean = np.ones(4, dtype=np.int8)
    with pytest.raises(InvalidArgument, match="context"):
        corrupt(clean, CorruptionBudget(0.5, 4), "min_margin", {"A": np.eye(4)})
    with pytest.raises(InvalidArgument, match="unknown"):
        corrupt(clean, CorruptionBudget(0.5, 4), "greedy")
    with pytest.raises(InvalidArgument):
        corrupt(clean, CorruptionBudget(0.5, 5), "random")
    assert set(STRATEGIES) == {"random", "min_margin", "estimate_aligned", "exhaustive"}


def _brute_force_worst(A, x, x_prev, k, budget):
    """Independent enumeration: score every flip set, then pick max error and
    the smallest tuple among the maximizers."""
    m = A.shape[0]
    clean = np.where(A @ x < 0, -1, 1)
    scored = []
    for ell in range(1, budget + 1):
        for flips in itertools.combinations(range(m), ell):
            y = clean.copy()
            y[list(flips)] *= -1
            try:
                nxt = biht_step(A, y, x_prev, k)
            except ArithmeticError:
                nxt = x_prev
            scored.append((sphere_distance(x, nxt), flips))
    top = max(s for s, _ in scored)
    return min(f for s, f in scored if s == top), top


@pytest.mark.parametrize("m, budget", [(8, 2), (6, 1)])
def test_exhaustive_matches_brute_force(m, budget):
    for seed in range(15):
        ctx = _context(seed, m=m, n=5, k=2)
        got = exhaustive_worst_case(ctx["A"], ctx["x"], ctx["x_prev"], 2, budget)
        want, top = _brute_force_worst(ctx["A"], ctx["x"], ctx["x_prev"], 2, budget)
        assert got.flipped == want
        y = apply_pattern(clean_responses(ctx["A"], ctx["x"]), got.flipped)
        assert one_step_error(ctx["A"], y, ctx["x"], ctx["x_prev"], 2) == top


def test_exhaustive_dominates_min_margin():
    for seed in range(20):
        ctx = _context(seed, m=8, n=5, k=2)
        clean = clean_responses(ctx["A"], ctx["x"])
        budget = CorruptionBudget(0.25, 8)
        y_ex, _ = corrupt(clean, budget, "exhaustive", ctx)
        y_mm, _ = corrupt(clean, budget, "min_margin", ctx)
        e_ex = one_step_error(ctx["A"], y_ex, ctx["x"], ctx["x_prev"], 2)
        e_mm = one_step_error(ctx["A"], y_mm, ctx["x"], ctx["x_prev"], 2)
        assert e_ex >= e_mm


def test_exhaustive_ties_go_to_smallest_tuple():
    # identical rows make every single flip equally damaging
    A = np.tile([[1.0, 0.5]], (4, 1))
    got = exhaustive_worst_case(A, np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1, 1)
    assert got.flipped == (0,)


def test_exhaustive_guard():
    assert count_patterns(6, 2) == 21
    m = 200
    assert count_patterns(m, 3) > ENUMERATION_GUARD
    ctx = _context(0, m=m)
    with pytest.raises(ResourceError):
        exhaustive_worst_case(ctx["A"], ctx["x"], ctx["x_prev"], 2, 3)
    with pytest.raises(InvalidArgument):
        exhaustive_worst_case(ctx["A"], ctx["x"], ctx["x_prev"], 2, 0)
