"""Executable checks: exact identities, the deterministic thresholding bound,
an empirical audit of the restricted approximate invertibility condition,
image enumeration, and Monte-Carlo concentration estimates.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .adversary import CorruptionBudget, apply_pattern, corrupt, ENUMERATION_GUARD
from .biht import ETA, h_f_restricted, h_restricted
from .ensemble import as_matrix, sample_sparse_unit
from .errors import DegenerateIterate, InvalidArgument, PreconditionError, ResourceError
from .linops import (
    SparseUnitVector,
    _signs_unchecked,
    as_vector,
    sphere_distance,
    subset_threshold,
    support,
    top_k_threshold,
)
from .rng import Rng, derive_seed
from .theory import log_binom, raic_rhs

__all__ = [
    "AuditReport",
    "check_decomposition_identity",
    "orthogonal_split",
    "check_thresholding_lemma",
    "audit_raic",
    "enumerate_adversary_images",
    "image_count_bound",
    "halfnormal_identity",
    "mc_halfnormal_mean",
    "mc_halfnormal_tail",
    "mc_projected_norm",
    "chi_mean",
    "check_d1_bound",
    "PERTURBATION_SCALES",
]

PERTURBATION_SCALES = (0.01, 0.1, 0.5)
IDENTITY_ATOL = 1e-12


def check_decomposition_identity(A, x, y_vec, y_signs, J) -> float:
    """Max-abs residual of ``h_fJ(x, y) - h_J(x, y) - h_fJ(x, x)``.

    All three maps are restricted to the same set
    ``supp(x) | supp(y) | J``; the corrupted responses ``y_signs`` are used
    in both ``h_f`` terms.
    """
    J = {int(j) for j in J}
    hf_xy = h_f_restricted(A, y_signs, x, y_vec, J)
    h_xy = h_restricted(A, x, y_vec, J)
    hf_xx = h_f_restricted(A, y_signs, x, x, J | set(support(y_vec)))
    return float(np.max(np.abs(hf_xy - h_xy - hf_xx)))


def orthogonal_split(h, u):
    """Split ``h`` into its component along the unit vector ``u`` and the rest.

    Returns ``(coef, parallel, perp)`` with ``h == parallel + perp``.
    """
    h, u = as_vector(h, "h"), as_vector(u, "u")
    coef = float(u @ h)
    parallel = coef * u
    return coef, parallel, h - parallel


def check_thresholding_lemma(z, v, w, k: int | None = None):
    """Compare ``||z - u||`` with ``4 ||(z - v) - T_S(w)||`` where
    ``u = T_k(v + w) / ||T_k(v + w)||`` and ``S = supp(z) | supp(u) | supp(v)``.

    Returns ``(lhs, rhs, ok)``; ``ok`` allows 1e-12 of absolute roundoff,
    which renormalizing an already-unit ``v`` can produce when both sides
    are zero.
    """
    zd, vd, wd = as_vector(z, "z"), as_vector(v, "v"), as_vector(w, "w")
    if k is None:
        k = max(len(support(z)), len(support(v)))
    s = vd + wd
    if np.count_nonzero(s) < k:
        raise PreconditionError(f"||v + w||_0 = {np.count_nonzero(s)} < k = {k}")
    tk = top_k_threshold(s, k)
    norm = np.linalg.norm(tk)
    if norm == 0:
        raise DegenerateIterate("T_k(v + w) vanished")
    u = tk / norm
    S = support(zd) | support(u) | support(vd)
    lhs = float(np.linalg.norm(zd - u))
    rhs = 4.0 * float(np.linalg.norm((zd - vd) - subset_threshold(wd, S)))
    return lhs, rhs, lhs <= rhs + IDENTITY_ATOL


@dataclass
class AuditReport:
    samples: int
    max_ratio: float
    violations: int
    worst_case: dict = field(default_factory=dict)
    mean_ratio: float = 0.0

    def as_dict(self) -> dict:
        return {
            "samples": self.samples,
            "max_ratio": self.max_ratio,
            "mean_ratio": self.mean_ratio,
            "violations": self.violations,
            "worst_case": self.worst_case,
        }


def _audit_pair(M, k, i, seed):
    n = M.shape[1]
    rng = Rng(derive_seed(seed, i))
    x = sample_sparse_unit(n, k, rng)
    mode = i % (len(PERTURBATION_SCALES) + 1)
    if mode == 0:
        y = sample_sparse_unit(n, k, rng).dense()
        sigma = None
    else:
        sigma = PERTURBATION_SCALES[mode - 1]
        tk = top_k_threshold(x.dense() + sigma * rng.normals(n), k)
        y = tk / np.linalg.norm(tk)
    J = rng.subset(n, k)
    return rng, x, y, J, sigma


def audit_raic(A, tau, delta, num_pairs, strategy, seed, k) -> AuditReport:
    """Sample pairs ``(x, y)`` and sets ``J``, corrupt the responses of ``x``,
    and compare ``||(x - y) - h_fJ(x, y)||`` with the bound.

    A quarter of the pairs are independent draws; the rest are
    perturbations ``y = normalize(T_k(x + sigma g))`` for each
    ``sigma`` in :data:`PERTURBATION_SCALES`. ``strategy=None`` applies no
    flips while keeping ``tau`` in the bound.
    """
    M = as_matrix(A)
    if num_pairs < 1:
        raise InvalidArgument("num_pairs must be positive")
    budget = CorruptionBudget(tau, M.shape[0])
    ratios = []
    worst, worst_ratio, violations = {}, -1.0, 0
    for i in range(num_pairs):
        rng, x, y, J, sigma = _audit_pair(M, k, i, seed)
        xd = x.dense()
        clean = _signs_unchecked(M @ xd)
        if strategy is None:
            ys, flipped = clean, ()
        else:
            ctx = {"A": M, "x": xd, "x_prev": y, "k": k}
            ys, pattern = corrupt(clean, budget, strategy, ctx, rng)
            flipped = pattern.flipped
        lhs = float(np.linalg.norm((xd - y) - h_f_restricted(M, ys, xd, y, J)))
        d = min(sphere_distance(xd, y), 2.0)
        rhs = raic_rhs(delta, d, tau)
        ratio = lhs / rhs
        ratios.append(ratio)
        if lhs > rhs:
            violations += 1
        if ratio > worst_ratio:
            worst_ratio = ratio
            worst = {
                "pair": i,
                "pair_seed": derive_seed(seed, i),
                "sigma": sigma,
                "J": list(J),
                "flipped": list(flipped),
                "d_S": d,
                "lhs": lhs,
                "rhs": rhs,
            }
    return AuditReport(num_pairs, worst_ratio, violations, worst, float(np.mean(ratios)))


def image_count_bound(m: int, budget: int) -> int:
    """``sum_{l=1}^{budget} C(m, l) 2^l``."""
    return sum(math.comb(m, ell) * 2**ell for ell in range(1, budget + 1))


def enumerate_adversary_images(A, x_points, J, budget: int):
    """Distinct values of ``h_fJ(u, u)`` over every flip set of size
    1..budget of ``sgn(Au)`` and every supplied point ``u``.

    ``budget = 0`` enumerates only the empty flip set. Returns
    ``(image_count, max_norm)``.
    """
    M = as_matrix(A)
    m = M.shape[0]
    budget = int(budget)
    if budget < 0 or budget > m:
        raise InvalidArgument(f"budget {budget} outside [0, m={m}]")
    sizes = [0] if budget == 0 else range(1, budget + 1)
    per_point = sum(math.comb(m, ell) for ell in sizes)
    if per_point * len(x_points) > ENUMERATION_GUARD:
        raise ResourceError("image enumeration exceeds the guard")
    J = {int(j) for j in J}
    images = set()
    max_norm = 0.0
    for u in x_points:
        ud = as_vector(u, "u")
        clean = _signs_unchecked(M @ ud)
        for ell in sizes:
            for flips in itertools.combinations(range(m), ell):
                img = h_f_restricted(M, apply_pattern(clean, flips), ud, ud, J)
                images.add(img.tobytes())
                max_norm = max(max_norm, float(np.linalg.norm(img)))
    return len(images), max_norm


def halfnormal_identity(u, J, a) -> tuple[float, float]:
    """``(<u, T_S(a)> sgn(<u, T_S(a)>), |<u, a>|)`` with ``S = supp(u) | J``.
    The two agree exactly."""
    ud, ad = as_vector(u, "u"), as_vector(a, "a")
    p = float(ud @ subset_threshold(ad, support(ud) | {int(j) for j in J}))
    return p * (-1.0 if p < 0 else 1.0), abs(float(ud @ ad))


def mc_halfnormal_mean(N: int, seed) -> float:
    """Sample mean of ``|Z|``, ``Z ~ N(0, 1)``."""
    if N < 10_000:
        raise InvalidArgument("N must be at least 10^4")
    return float(np.mean(np.abs(Rng(seed).normals(N))))


def _sample_projections(u, J, ell, N, seed):
    # only coordinates in supp(u) | J matter after thresholding
    ud = as_vector(u, "u")
    S = sorted(support(ud) | {int(j) for j in J})
    G = Rng(seed).normals(N * ell * len(S)).reshape(N, ell, len(S))
    return ud[S], G


def _tail_summary(values, thresholds, ts, ell, N):
    out = {}
    for t, thr in zip(ts, thresholds):
        rate = float(np.mean(values > thr))
        bound = math.exp(-0.5 * ell * t * t)
        se = math.sqrt(bound * (1 - bound) / N)
        out[t] = {"rate": rate, "bound": bound, "se": se, "ok": rate <= bound + 3 * se}
    return out


def mc_halfnormal_tail(u, J, ell: int, N: int, seed, ts=(0.5, 1.0, 2.0)) -> dict:
    """Exceedance rate of ``sum_i |<u, a_i>| >= (sqrt(2/pi) + t) ell`` per ``t``,
    against ``exp(-ell t^2 / 2)``."""
    uS, G = _sample_projections(u, J, ell, N, seed)
    xbar = np.abs(G @ uS).sum(axis=1)
    mu = math.sqrt(2 / math.pi)
    # '>=' is the event; equality has probability zero
    return _tail_summary(xbar, [(mu + t) * ell for t in ts], ts, ell, N)


def chi_mean(d: int) -> float:
    """``E[chi_d] = sqrt(2) Gamma((d+1)/2) / Gamma(d/2)``."""
    return math.sqrt(2) * math.exp(math.lgamma((d + 1) / 2) - math.lgamma(d / 2))


@dataclass
class ProjectedNormEstimate:
    k_union: int
    mean_estimate: float
    mean_expected: float
    tails: dict


def mc_projected_norm(n, k, J, ell, N, seed, ts=(0.5, 1.0, 2.0), u=None) -> ProjectedNormEstimate:
    """Monte-Carlo law of ``||Y||`` where
    ``Y = sum_{i<=ell} s_i (T_S(a_i) - <u, a_i> u)`` and ``s_i = sgn(<u, a_i>)``.

    The mean is compared with ``sqrt(ell) E[chi_{k'-1}]``, ``k' = |S|``,
    and exceedances of ``sqrt((k'-1) ell / 2) + ell t`` with
    ``exp(-ell t^2 / 2)``. ``u`` defaults to a sparse unit drawn from
    ``seed``.
    """
    if u is None:
        u = sample_sparse_unit(n, k, derive_seed(seed, 0xC0FFEE))
    ud = as_vector(u, "u")
    if ud.size != n:
        raise InvalidArgument("u has the wrong dimension")
    k_union = len(support(ud) | {int(j) for j in J})
    if k_union < 2:
        raise InvalidArgument("|supp(u) | J| must be at least 2")
    uS, G = _sample_projections(ud, J, ell, N, seed)
    proj = G @ uS
    s = np.where(proj < 0, -1.0, 1.0)
    Y = np.einsum("nl,nls->ns", s, G) - np.abs(proj).sum(axis=1)[:, None] * uS[None, :]
    norms = np.linalg.norm(Y, axis=1)
    base = math.sqrt((k_union - 1) * ell / 2)
    tails = _tail_summary(norms, [base + ell * t for t in ts], ts, ell, N)
    return ProjectedNormEstimate(
        k_union, float(norms.mean()), math.sqrt(ell) * chi_mean(k_union - 1), tails
    )


def d1_deviation(ell: int, m: int, n: int, k: int, tau: float, rho: float) -> float:
    """``t_u = sqrt((2/ell) log(2 * 2^ell C(m,ell) C(n,k) * 3 tau m / rho))``."""
    log_arg = (
        math.log(2) + ell * math.log(2) + log_binom(m, ell) + log_binom(n, k)
        + math.log(3 * tau * m / rho)
    )
    return math.sqrt(2.0 / ell * log_arg)


def check_d1_bound(A, u, J, pattern, tau: float, rho: float = 0.1, k: int | None = None):
    """``|<u, h_fJ(u, u)>|`` against ``2 ell/m + sqrt(2 pi) ell t_u / m``,
    where the flip set ``pattern`` of size ``ell`` is applied to ``sgn(Au)``.

    Returns ``(lhs, bound, lhs <= bound)``; raises if the exact sign
    property ``<u, -h_fJ(u, u)> >= 0`` fails.
    """
    M = as_matrix(A)
    m, n = M.shape
    ud = as_vector(u, "u")
    k = len(support(ud)) if k is None else k
    flips = tuple(sorted(int(i) for i in pattern))
    ys = apply_pattern(_signs_unchecked(M @ ud), flips)
    h = h_f_restricted(M, ys, ud, ud, J)
    inner = float(ud @ -h)
    if inner < 0:
        raise AssertionError(f"<u, -h_fJ(u,u)> = {inner} is negative")
    lhs = abs(inner)
    ell = len(flips)
    if ell == 0:
        return lhs, 0.0, lhs <= 0.0
    t_u = d1_deviation(ell, m, n, k, tau, rho)
    bound = 2 * ell / m + ETA * ell * t_u / m
    return lhs, bound, lhs <= bound
