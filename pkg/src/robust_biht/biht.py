"""Correction maps and normalized binary iterative hard thresholding.

With ``eta = sqrt(2*pi)`` the update of one iteration is::

    x_tilde = x_prev + sqrt(2*pi)/m * A.T @ (y - sgn(A x_prev)) / 2
    x_next  = T_k(x_tilde) / ||T_k(x_tilde)||
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .ensemble import as_matrix
from .errors import DegenerateIterate, InvalidArgument
from .linops import (
    SparseUnitVector,
    _signs_unchecked,
    as_vector,
    sphere_distance,
    subset_threshold,
    support,
    top_k_threshold,
)

__all__ = [
    "ETA",
    "h_map",
    "h_f_map",
    "h_f_map_indicator",
    "h_restricted",
    "h_f_restricted",
    "biht_step",
    "biht_run",
    "RecoveryTrace",
]

ETA = math.sqrt(2.0 * math.pi)


def _check(M, v, name):
    v = as_vector(v, name)
    if v.size != M.shape[1]:
        raise InvalidArgument(f"{name} has dimension {v.size}, A has n={M.shape[1]}")
    return v


def _check_signs(M, y):
    y = np.asarray(y)
    if y.ndim != 1 or y.size != M.shape[0]:
        raise InvalidArgument(f"responses length {y.size} != m={M.shape[0]}")
    if not np.all((y == 1) | (y == -1)):
        raise InvalidArgument("responses must be +1/-1")
    return y.astype(float)


def h_map(A, u, v) -> np.ndarray:
    """``sqrt(2 pi)/m * A^T (sgn(Au) - sgn(Av)) / 2``."""
    M = as_matrix(A)
    u, v = _check(M, u, "u"), _check(M, v, "v")
    diff = 0.5 * (_signs_unchecked(M @ u).astype(float) - _signs_unchecked(M @ v))
    return (ETA / M.shape[0]) * (M.T @ diff)


def h_f_map(A, y, v) -> np.ndarray:
    """Correction towards the observed responses ``y`` from the point ``v``."""
    M = as_matrix(A)
    yv = _check_signs(M, y)
    v = _check(M, v, "v")
    diff = 0.5 * (yv - _signs_unchecked(M @ v))
    return (ETA / M.shape[0]) * (M.T @ diff)


def h_f_map_indicator(A, y, v) -> np.ndarray:
    """Same map written as a sum over mismatched rows:
    ``-sqrt(2 pi)/m * sum_i a_i sgn(<a_i,v>) 1[y_i != sgn(<a_i,v>)]``."""
    M = as_matrix(A)
    yv = _check_signs(M, y)
    v = _check(M, v, "v")
    s = _signs_unchecked(M @ v)
    out = np.zeros(M.shape[1])
    for i in np.flatnonzero(yv != s):
        out -= M[i] * s[i]
    return (ETA / M.shape[0]) * out


def _union(u, v, J) -> set:
    return set(support(u)) | set(support(v)) | {int(j) for j in J}


def h_restricted(A, u, v, J: Iterable[int]) -> np.ndarray:
    """:func:`h_map` restricted to ``supp(u) | supp(v) | J``."""
    return subset_threshold(h_map(A, u, v), _union(u, v, J))


def h_f_restricted(A, y, u, v, J: Iterable[int]) -> np.ndarray:
    """:func:`h_f_map` restricted to ``supp(u) | supp(v) | J``.

    ``u`` only contributes its support; the responses ``y`` stand in for
    the adversary's image of ``u``.
    """
    return subset_threshold(h_f_map(A, y, v), _union(u, v, J))


def biht_step(A, y, x_prev, k: int) -> np.ndarray:
    """One normalized BIHT update. Raises :class:`DegenerateIterate` when
    ``T_k`` of the pre-projection vector is zero."""
    M = as_matrix(A)
    xp = _check(M, x_prev, "x_prev")
    k = int(k)
    if k < 1 or k > M.shape[1]:
        raise InvalidArgument(f"k={k} outside [1, n={M.shape[1]}]")
    corr = h_f_map(M, y, xp)
    if not np.any(corr):
        return xp.copy()
    xt = top_k_threshold(xp + corr, k)
    norm = np.linalg.norm(xt)
    if norm == 0.0:
        raise DegenerateIterate("top-k projection vanished")
    return xt / norm


@dataclass
class RecoveryTrace:
    iterates: list
    errors: Optional[list] = None
    fixed_point_at: Optional[int] = None
    degenerate_at: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> SparseUnitVector:
        return self.iterates[-1]

    def to_records(self) -> list:
        """Trace export rows ``{t, support, values, d_S}``."""
        rows = []
        for t, it in enumerate(self.iterates):
            rows.append({
                "t": t,
                "support": list(it.support),
                "values": list(it.values),
                "d_S": None if self.errors is None else self.errors[t],
            })
        return rows

    def to_json(self) -> str:
        return json.dumps(self.to_records())


def _to_sparse(v) -> SparseUnitVector:
    return v if isinstance(v, SparseUnitVector) else SparseUnitVector.from_dense(v)


def biht_run(
    A,
    y,
    k: int,
    T: int,
    init,
    truth=None,
    stop_at_fixed_point: bool = False,
    responses_for: Callable | None = None,
) -> RecoveryTrace:
    """Run ``T`` iterations from ``init``.

    The responses ``y`` stay fixed. ``responses_for(t, x_prev)``, if given,
    replaces them at every iteration (experimental re-corruption).
    A degenerate step holds the previous iterate for the rest of the run.
    """
    T = int(T)
    if T < 0:
        raise InvalidArgument("T must be nonnegative")
    M = as_matrix(A)
    cur = _check(M, init, "init")
    truth_d = None if truth is None else _check(M, truth, "truth")
    iterates = [_to_sparse(init)]
    errors = None if truth_d is None else [sphere_distance(truth_d, cur)]
    trace = RecoveryTrace(iterates, errors)
    for t in range(1, T + 1):
        yt = y if responses_for is None else responses_for(t, cur)
        try:
            nxt = biht_step(M, yt, cur, k)
        except DegenerateIterate:
            if trace.degenerate_at is None:
                trace.degenerate_at = t
            iterates.append(iterates[-1])
            if errors is not None:
                errors.append(errors[-1])
            if responses_for is not None:
                continue
            # y is fixed, so every later step repeats the degenerate one
            for _ in range(t + 1, T + 1):
                iterates.append(iterates[-1])
                if errors is not None:
                    errors.append(errors[-1])
            break
        if trace.fixed_point_at is None and np.array_equal(nxt, cur):
            trace.fixed_point_at = t
        cur = nxt
        iterates.append(_to_sparse(nxt))
        if errors is not None:
            errors.append(sphere_distance(truth_d, cur))
        if stop_at_fixed_point and trace.fixed_point_at is not None:
            break
    return trace
