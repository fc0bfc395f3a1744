"""Sign convention, hard thresholding and distances on dense vectors.

Vectors are plain 1-d ``numpy`` float arrays. :class:`SparseUnitVector` is a
thin wrapper that also remembers its support, which keeps support unions
cheap.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "SparseUnitVector",
    "as_vector",
    "sign_scalar",
    "sign_vector",
    "top_k_threshold",
    "subset_threshold",
    "support",
    "sphere_distance",
    "hamming_distance",
]

NORM_TOL = 1e-12


def as_vector(v, name="v") -> np.ndarray:
    """Coerce ``v`` to a finite, non-empty 1-d float array."""
    if isinstance(v, SparseUnitVector):
        return v.dense()
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgument(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} has non-finite entries")
    return arr


def _as_signs(a, name) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise InvalidArgument(f"{name} must be 1-d")
    if not np.all((arr == 1) | (arr == -1)):
        raise InvalidArgument(f"{name} entries must be -1 or +1")
    return arr.astype(np.int8)


def sign_scalar(a: float) -> int:
    """Sign with ``sgn(0) = +1``."""
    a = float(a)
    if not np.isfinite(a):
        raise InvalidArgument("sign of a non-finite value")
    return -1 if a < 0 else 1


def sign_vector(v) -> np.ndarray:
    """Entrywise :func:`sign_scalar`, returned as an ``int8`` array."""
    arr = as_vector(v)
    return np.where(arr < 0, -1, 1).astype(np.int8)


def _signs_unchecked(v: np.ndarray) -> np.ndarray:
    # hot path: callers guarantee finiteness
    return np.where(v < 0, -1, 1).astype(np.int8)


def top_k_threshold(v, ell: int) -> np.ndarray:
    """Keep the ``ell`` largest-magnitude entries of ``v`` and zero the rest.

    Ties are broken in favour of the lowest index.
    """
    arr = as_vector(v)
    ell = int(ell)
    if ell < 1 or ell > arr.size:
        raise InvalidArgument(f"threshold size {ell} outside [1, {arr.size}]")
    keep = np.argsort(-np.abs(arr), kind="stable")[:ell]
    out = np.zeros_like(arr)
    out[keep] = arr[keep]
    return out


def _index_array(J: Iterable[int], dim: int) -> np.ndarray:
    idx = np.fromiter((int(j) for j in J), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= dim):
        raise InvalidArgument(f"index set has entries outside [0, {dim})")
    return idx


def subset_threshold(v, J: Iterable[int]) -> np.ndarray:
    """Keep the entries of ``v`` indexed by ``J`` and zero the rest."""
    arr = as_vector(v)
    idx = _index_array(J, arr.size)
    out = np.zeros_like(arr)
    out[idx] = arr[idx]
    return out


def support(v) -> frozenset:
    if isinstance(v, SparseUnitVector):
        return frozenset(v.support)
    return frozenset(np.flatnonzero(as_vector(v)).tolist())


def sphere_distance(u, v) -> float:
    """Distance between the projections of ``u`` and ``v`` onto the unit sphere.

    Zero if both vectors vanish and one if exactly one does.
    """
    a, b = as_vector(u, "u"), as_vector(v, "v")
    if a.size != b.size:
        raise InvalidArgument(f"dimension mismatch: {a.size} vs {b.size}")
    ua, ub = _unit(a), _unit(b)
    if ua is None and ub is None:
        return 0.0
    if ua is None or ub is None:
        return 1.0
    return float(np.linalg.norm(ua - ub))


def _unit(a: np.ndarray):
    nrm = np.linalg.norm(a)
    if 1e-150 < nrm < 1e150:
        return a / nrm
    # rescale by the max entry first so tiny or huge vectors do not under/overflow
    s = np.max(np.abs(a))
    if s == 0:
        return None
    a = a / s
    return a / np.linalg.norm(a)


def hamming_distance(a, b) -> int:
    sa, sb = _as_signs(a, "a"), _as_signs(b, "b")
    if sa.size != sb.size:
        raise InvalidArgument(f"length mismatch: {sa.size} vs {sb.size}")
    return int(np.count_nonzero(sa != sb))


@dataclass(frozen=True)
class SparseUnitVector:
    """A unit-norm vector of dimension ``n`` stored by its support."""

    n: int
    support: tuple
    values: tuple

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgument("dimension must be positive")
        if len(self.support) != len(self.values):
            raise InvalidArgument("support and values differ in length")
        s = self.support
        if any(s[i] >= s[i + 1] for i in range(len(s) - 1)):
            raise InvalidArgument("support must be strictly increasing")
        if s and (s[0] < 0 or s[-1] >= self.n):
            raise InvalidArgument("support index out of range")
        norm = float(np.linalg.norm(self.values)) if self.values else 0.0
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidArgument(f"vector is not unit norm (norm={norm!r})")

    @classmethod
    def from_dense(cls, v) -> "SparseUnitVector":
        arr = as_vector(v)
        idx = np.flatnonzero(arr)
        return cls(arr.size, tuple(int(i) for i in idx), tuple(float(arr[i]) for i in idx))

    def dense(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[list(self.support)] = self.values
        return out

    @property
    def k(self) -> int:
        return len(self.support)
