"""Bounded sign-flip adversaries.

Every strategy flips at most ``ceil(tau * m)`` responses of ``sgn(Ax)``:

``random``            uniformly random positions
``min_margin``        positions with the smallest ``|<a_i, x>|``
``estimate_aligned``  among positions where ``sgn(Ax)`` agrees with
                      ``sgn(A x_prev)``, those with the smallest ``|<a_i, x>|``
``exhaustive``        the pattern that maximizes the error of one BIHT step
                      from ``x_prev`` (tiny ``m`` only)
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .biht import biht_step
from .ensemble import as_matrix
from .errors import DegenerateIterate, InvalidArgument, ResourceError
from .linops import _signs_unchecked, as_vector, sphere_distance
from .rng import Rng

__all__ = [
    "STRATEGIES",
    "CorruptionBudget",
    "CorruptionPattern",
    "corrupt",
    "apply_pattern",
    "exhaustive_worst_case",
    "one_step_error",
    "count_patterns",
    "ENUMERATION_GUARD",
]

STRATEGIES = ("random", "min_margin", "estimate_aligned", "exhaustive")
ENUMERATION_GUARD = 10**6


@dataclass(frozen=True)
class CorruptionBudget:
    tau: float
    m: int

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0):
            raise InvalidArgument(f"tau must lie in (0, 1], got {self.tau}")
        if self.m < 1:
            raise InvalidArgument("m must be positive")

    @property
    def budget(self) -> int:
        # tau*m can land a hair above an integer in floating point
        return min(self.m, math.ceil(round(self.tau * self.m, 9)))


@dataclass(frozen=True)
class CorruptionPattern:
    flipped: tuple

    def __len__(self):
        return len(self.flipped)


def apply_pattern(clean, flipped) -> np.ndarray:
    y = np.array(clean, dtype=np.int8, copy=True)
    idx = list(flipped)
    y[idx] = -y[idx]
    return y


def count_patterns(m: int, budget: int) -> int:
    """Number of non-empty flip sets of size at most ``budget``."""
    return sum(math.comb(m, ell) for ell in range(1, budget + 1))


def one_step_error(A, y, x, x_prev, k) -> float:
    """``d_S(x, biht_step(A, y, x_prev, k))``; a degenerate step keeps ``x_prev``."""
    try:
        nxt = biht_step(A, y, x_prev, k)
    except DegenerateIterate:
        nxt = as_vector(x_prev)
    return sphere_distance(x, nxt)


def _smallest_margin(margins: np.ndarray, candidates: np.ndarray, budget: int) -> tuple:
    order = candidates[np.argsort(margins[candidates], kind="stable")]
    return tuple(sorted(int(i) for i in order[:budget]))


def exhaustive_worst_case(A, x, x_prev, k: int, budget: int) -> CorruptionPattern:
    """Flip set of size 1..budget maximizing the one-step error.

    Ties go to the lexicographically smallest flip set.
    """
    M = as_matrix(A)
    m = M.shape[0]
    budget = int(budget)
    if budget < 1 or budget > m:
        raise InvalidArgument(f"budget {budget} outside [1, m={m}]")
    total = count_patterns(m, budget)
    if total > ENUMERATION_GUARD:
        raise ResourceError(f"{total} flip sets exceed the enumeration guard of {ENUMERATION_GUARD}")
    xv = as_vector(x, "x")
    clean = _signs_unchecked(M @ xv)
    best, best_err = None, -1.0
    for ell in range(1, budget + 1):
        for flips in itertools.combinations(range(m), ell):
            err = one_step_error(M, apply_pattern(clean, flips), xv, x_prev, k)
            if err > best_err or (err == best_err and flips < best):
                best, best_err = flips, err
    return CorruptionPattern(best)


def corrupt(clean, budget: CorruptionBudget, strategy: str, context: dict | None = None, seed=0):
    """Return ``(y, pattern)`` where ``y`` differs from ``clean`` exactly on
    ``pattern.flipped``.

    ``context`` keys: ``A`` and ``x`` (all but ``random``), ``x_prev``
    (``estimate_aligned`` and ``exhaustive``), ``k`` (``exhaustive``).
    """
    clean = np.asarray(clean, dtype=np.int8)
    ctx = context or {}
    strategy = strategy.replace("-", "_")
    if strategy not in STRATEGIES:
        raise InvalidArgument(f"unknown strategy {strategy!r}")
    if clean.size != budget.m:
        raise InvalidArgument(f"responses length {clean.size} != budget m={budget.m}")
    required = {
        "random": (),
        "min_margin": ("A", "x"),
        "estimate_aligned": ("A", "x", "x_prev"),
        "exhaustive": ("A", "x", "x_prev", "k"),
    }[strategy]
    missing = [key for key in required if ctx.get(key) is None]
    if missing:
        raise InvalidArgument(f"strategy {strategy!r} needs context {missing}")
    b = budget.budget

    if strategy == "random":
        rng = seed if isinstance(seed, Rng) else Rng(seed)
        flipped = tuple(rng.subset(clean.size, b))
    elif strategy == "exhaustive":
        flipped = exhaustive_worst_case(ctx["A"], ctx["x"], ctx["x_prev"], ctx["k"], b).flipped
    else:
        M = as_matrix(ctx["A"])
        margins = np.abs(M @ as_vector(ctx["x"], "x"))
        if strategy == "min_margin":
            cand = np.arange(clean.size)
        else:
            est = _signs_unchecked(M @ as_vector(ctx["x_prev"], "x_prev"))
            cand = np.flatnonzero(est == clean)
        flipped = _smallest_margin(margins, cand, b)
    return apply_pattern(clean, flipped), CorruptionPattern(flipped)
