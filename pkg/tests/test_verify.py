import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from robust_biht.adversary import count_patterns
from robust_biht.biht import ETA, h_f_restricted
from robust_biht.ensemble import clean_responses, sample_gaussian_matrix, sample_sparse_unit
from robust_biht.errors import InvalidArgument, PreconditionError, ResourceError
from robust_biht.linops import SparseUnitVector, top_k_threshold
from robust_biht.rng import Rng
from robust_biht.theory import adversarial_term, m0
from robust_biht.verify import (
    audit_raic,
    check_d1_bound,
    check_decomposition_identity,
    check_thresholding_lemma,
    chi_mean,
    d1_deviation,
    enumerate_adversary_images,
    halfnormal_identity,
    image_count_bound,
    mc_halfnormal_mean,
    mc_halfnormal_tail,
    mc_projected_norm,
)


def test_decomposition_identity_random_instances():
    rng = np.random.default_rng(0)
    worst = 0.0
    for seed in range(100):
        m, n, k = int(rng.integers(5, 60)), 10, 2
        A = sample_gaussian_matrix(m, n, seed).rows
        x = sample_sparse_unit(n, k, seed + 1).dense()
        y = sample_sparse_unit(n, k, seed + 2).dense()
        ys = np.where(rng.random(m) < 0.2, -1, 1) * clean_responses(A, x)
        J = rng.choice(n, k, replace=False).tolist()
        worst = max(worst, check_decomposition_identity(A, x, y, ys, J))
    assert worst <= 1e-12


def test_decomposition_identity_hand_case():
    A = np.array([[1.0, 1.0], [1.0, -1.0]])
    x, y = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert check_decomposition_identity(A, x, y, np.array([-1, -1]), []) == 0.0


def test_decomposition_identity_single_flip_n3():
    A = np.array([[1.0, 2.0, 0.0], [0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [0.5, 0.5, 0.5]])
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.0, 0.6, 0.8])
    ys = clean_responses(A, x).copy()
    assert check_decomposition_identity(A, x, y, ys, [2]) == 0.0
    ys[1] *= -1
    assert check_decomposition_identity(A, x, y, ys, [2]) == 0.0


finite = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 10), st.data())
def test_thresholding_lemma_holds(n, data):
    k = data.draw(st.integers(1, n // 2))
    z = data.draw(arrays(np.float64, n, elements=finite))
    v = data.draw(arrays(np.float64, n, elements=finite))
    w = data.draw(arrays(np.float64, n, elements=finite))
    z, v = top_k_threshold(z, k), top_k_threshold(v, k)
    assume(np.linalg.norm(z) > 1e-6 and np.linalg.norm(v) > 1e-6)
    z, v = z / np.linalg.norm(z), v / np.linalg.norm(v)
    assume(np.count_nonzero(v + w) >= k)
    lhs, rhs, ok = check_thresholding_lemma(z, v, w, k)
    assert ok


def test_thresholding_lemma_examples():
    z = np.array([1.0, 0, 0])
    lhs, rhs, ok = check_thresholding_lemma(z, z, np.zeros(3))
    assert (lhs, rhs, ok) == (0.0, 0.0, True)
    # v = e1, w pushes mass onto e2: u = e2, lhs = sqrt 2, rhs = 4 * ||-w_S||
    lhs, rhs, ok = check_thresholding_lemma(z, z, np.array([-1.0, 2.0, 0.0]))
    assert lhs == pytest.approx(math.sqrt(2)) and rhs == pytest.approx(4 * math.sqrt(5)) and ok
    # w = z - v with u = z: nothing left to bound
    v = np.array([0.0, 0.6, 0.8])
    z2 = np.array([0.0, 0.8, 0.6])
    lhs, rhs, ok = check_thresholding_lemma(z2, v, z2 - v)
    assert lhs == 0.0 and ok
    # w = 0: u = v and the inequality reads ||z - v|| <= 4 ||z - v||
    lhs, rhs, ok = check_thresholding_lemma(z, v, np.zeros(3), 2)
    assert rhs == pytest.approx(4 * lhs) and lhs == pytest.approx(np.linalg.norm(z - v)) and ok
    with pytest.raises(PreconditionError):
        check_thresholding_lemma(np.array([0.6, 0.8, 0]), np.array([0.6, 0.8, 0]), np.array([-0.6, -0.8, 0]))


def test_audit_is_deterministic_and_clean():
    A = sample_gaussian_matrix(2000, 100, 5).rows
    a = audit_raic(A, 0.02, 0.05, 40, "min_margin", 9, 3)
    b = audit_raic(A, 0.02, 0.05, 40, "min_margin", 9, 3)
    assert a.as_dict() == b.as_dict()
    assert a.violations == 0
    # frozen from the first run
    assert a.max_ratio == pytest.approx(0.1751971901375763, rel=1e-9)
    w = a.worst_case
    assert set(w) >= {"pair", "pair_seed", "J", "flipped", "d_S", "lhs", "rhs"}
    assert len(w["flipped"]) == 40 and w["lhs"] / w["rhs"] == pytest.approx(a.max_ratio)


def test_audit_regression_at_scaled_m0():
    # m = 0.01 * m0(0.25) for n=50, k=3; 500 pairs frozen from the first run
    m = math.ceil(0.01 * m0(0.25, 50, 3, 0.1))
    assert m == 1538
    A = sample_gaussian_matrix(m, 50, 2024).rows
    r = audit_raic(A, 0.02, 0.25, 500, "min_margin", 2024, 3)
    assert r.violations == 0
    assert r.max_ratio == pytest.approx(0.14573217749902959, rel=1e-9)
    assert r.mean_ratio == pytest.approx(0.05883154512723152, rel=1e-9)


def test_audit_equal_pair_reduces_to_correction_norm():
    # the x = y case by hand: LHS is the norm of the correction at x
    A = sample_gaussian_matrix(500, 20, 3).rows
    x = sample_sparse_unit(20, 2, 4).dense()
    ys = clean_responses(A, x).copy()
    ys[:10] *= -1
    lhs = np.linalg.norm((x - x) - h_f_restricted(A, ys, x, x, [5, 6]))
    assert lhs == pytest.approx(np.linalg.norm(h_f_restricted(A, ys, x, x, [5, 6])))
    from robust_biht.theory import raic_rhs

    assert raic_rhs(0.1, 0.0, 0.02) >= adversarial_term(0.1, 0.02)


@pytest.mark.parametrize("strategy", [None, "random", "estimate_aligned"])
def test_audit_other_strategies(strategy):
    A = sample_gaussian_matrix(2000, 100, 5).rows
    r = audit_raic(A, 0.02, 0.05, 20, strategy, 9, 3)
    assert r.samples == 20 and r.violations == 0 and 0 < r.max_ratio < 1


def test_audit_rejects_zero_pairs():
    with pytest.raises(InvalidArgument):
        audit_raic(np.eye(4), 0.1, 0.1, 0, None, 0, 1)


def _images_by_brute_force(A, points, J, budget):
    # independent path: explicit 2^m sign vectors filtered by Hamming distance
    m = A.shape[0]
    S_extra = set(J)
    out = set()
    for u in points:
        clean = np.where(A @ u < 0, -1, 1)
        allowed = sorted(set(np.flatnonzero(u).tolist()) | S_extra)
        for bits in itertools.product((-1, 1), repeat=m):
            y = np.array(bits)
            dist = int(np.sum(y != clean))
            if not (1 <= dist <= budget or (budget == 0 and dist == 0)):
                continue
            img = np.zeros(A.shape[1])
            diff = 0.5 * (y - clean)
            img[allowed] = (math.sqrt(2 * math.pi) / m) * (A.T @ diff)[allowed]
            out.add(tuple(np.round(img, 12)))
    return len(out)


def test_image_enumeration_counts():
    A = sample_gaussian_matrix(6, 5, 2).rows
    pts = [sample_sparse_unit(5, 2, s).dense() for s in range(3)]
    J = [4]
    count, max_norm = enumerate_adversary_images(A, pts[:1], J, 2)
    assert count <= count_patterns(6, 2) == 21
    assert count == _images_by_brute_force(A, pts[:1], J, 2)
    count3, _ = enumerate_adversary_images(A, pts, J, 2)
    assert count3 == _images_by_brute_force(A, pts, J, 2)
    assert count3 <= 3 * 21 <= 3 * image_count_bound(6, 2)
    assert max_norm > 0
    top2 = np.sort(np.linalg.norm(A, axis=1))[-2:].sum()
    assert max_norm <= ETA / 6 * top2 + 1e-12
    zero_count, zero_norm = enumerate_adversary_images(A, pts, J, 0)
    assert (zero_count, zero_norm) == (1, 0.0)
    with pytest.raises(ResourceError):
        enumerate_adversary_images(sample_gaussian_matrix(100, 3, 0).rows, [np.array([1.0, 0, 0])], [], 4)


def test_image_count_bound_values():
    assert image_count_bound(6, 1) == 12
    assert image_count_bound(6, 2) == 12 + 15 * 4


def test_halfnormal_identity_exact():
    rng = np.random.default_rng(4)
    for _ in range(200):
        u = np.zeros(8)
        idx = rng.choice(8, 3, replace=False)
        u[idx] = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        a = rng.standard_normal(8)
        left, right = halfnormal_identity(u, rng.choice(8, 2, replace=False), a)
        assert abs(left - right) <= 1e-14


def test_halfnormal_mean():
    est = mc_halfnormal_mean(200_000, 1)
    # sd of |Z| is sqrt(1 - 2/pi) ~ 0.60, so 5 se ~ 0.0067
    assert abs(est - math.sqrt(2 / math.pi)) < 0.007
    with pytest.raises(InvalidArgument):
        mc_halfnormal_mean(100, 1)


def test_halfnormal_tail_within_bound():
    u = SparseUnitVector(20, (0, 3), (0.6, 0.8))
    for ell in (1, 4, 16):
        tails = mc_halfnormal_tail(u, [5, 7], ell, 50_000, ell)
        assert all(v["ok"] for v in tails.values())


def test_halfnormal_identity_on_basis_vector():
    left, right = halfnormal_identity(np.array([1.0, 0, 0]), [2], np.array([-1.7, 3.0, 2.0]))
    assert left == right == 1.7


def test_chi_mean_values():
    assert chi_mean(1) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    assert chi_mean(2) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-14)
    assert chi_mean(3) == pytest.approx(2 * math.sqrt(2 / math.pi), rel=1e-14)


@pytest.mark.parametrize("k_union, ell", [(2, 1), (5, 4), (10, 1)])
def test_projected_norm_small_dimension(k_union, ell):
    u = SparseUnitVector(50, (0,), (1.0,))
    est = mc_projected_norm(50, 1, range(1, k_union), ell, 100_000, 3, u=u)
    assert est.k_union == k_union
    assert est.mean_estimate == pytest.approx(est.mean_expected, rel=0.01)
    assert all(v["ok"] for v in est.tails.values())


def test_projected_norm_tail_fails_in_high_dimension():
    # the sqrt((k'-1) ell / 2) threshold sits below the mean once k' is
    # large, so the exponential tail cannot hold there
    u = SparseUnitVector(100, (0,), (1.0,))
    est = mc_projected_norm(100, 1, range(1, 40), 1, 100_000, 3, u=u)
    assert est.mean_estimate == pytest.approx(est.mean_expected, rel=0.01)
    assert not est.tails[0.5]["ok"]
    assert est.tails[0.5]["rate"] > 0.9
    with pytest.raises(InvalidArgument):
        mc_projected_norm(10, 1, [], 1, 1000, 0, u=SparseUnitVector(10, (0,), (1.0,)))


def test_d1_deviation_by_hand():
    ell, m, n, k, tau, rho = 2, 100, 20, 3, 0.05, 0.1
    arg = 2 * 2**ell * math.comb(m, ell) * math.comb(n, k) * 3 * tau * m / rho
    assert d1_deviation(ell, m, n, k, tau, rho) == pytest.approx(math.sqrt(2 / ell * math.log(arg)), rel=1e-13)


def test_d1_bound_random_patterns():
    rng = Rng(12)
    for s in range(30):
        m, n, k = 400, 30, 3
        A = sample_gaussian_matrix(m, n, s).rows
        u = sample_sparse_unit(n, k, rng).dense()
        J = rng.subset(n, k)
        pattern = rng.subset(m, 20)
        lhs, bound, ok = check_d1_bound(A, u, J, pattern, 0.05)
        assert ok and lhs >= 0


def test_d1_sign_property_and_empty_pattern():
    A = sample_gaussian_matrix(50, 6, 1).rows
    u = sample_sparse_unit(6, 2, 1).dense()
    assert check_d1_bound(A, u, [], (), 0.1) == (0.0, 0.0, True)
    i = 17
    lhs, _, _ = check_d1_bound(A, u, [0], (i,), 0.1)
    assert lhs == pytest.approx(ETA / 50 * abs(A[i] @ u), rel=1e-12)
    # every single flip moves the correction against u
    for i in range(50):
        ys = clean_responses(A, u).copy()
        ys[i] *= -1
        assert u @ h_f_restricted(A, ys, u, u, []) <= 0
