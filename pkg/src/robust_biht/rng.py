"""Reproducible random streams: SplitMix64 seeding, xoshiro256++ output,
Box-Muller normals.

The kernels are compiled with numba; :mod:`robust_biht.rng` also keeps tiny
pure-Python versions (``_py_*``) that the tests use as a reference.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, uint64

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / (1 << 53)


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state once; return ``(new_state, output)``."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Per-trial seed: one SplitMix64 output from ``master_seed XOR index``."""
    return splitmix64((int(master_seed) ^ int(index)) & MASK64)[1]


def seed_state(seed: int) -> np.ndarray:
    s = int(seed) & MASK64
    out = []
    for _ in range(4):
        s, z = splitmix64(s)
        out.append(z)
    return np.array(out, dtype=np.uint64)


def _rotl_py(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


def _py_next(s: list) -> int:
    result = (_rotl_py((s[0] + s[3]) & MASK64, 23) + s[0]) & MASK64
    t = (s[1] << 17) & MASK64
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl_py(s[3], 45)
    return result


def _py_normals(seed: int, count: int) -> list:
    s = [int(v) for v in seed_state(seed)]
    out = []
    while len(out) < count:
        u1 = 1.0 - (_py_next(s) >> 11) * _INV_2_53
        u2 = (_py_next(s) >> 11) * _INV_2_53
        r = math.sqrt(-2.0 * math.log(u1))
        out.append(r * math.cos(_TWO_PI * u2))
        out.append(r * math.sin(_TWO_PI * u2))
    return out[:count]


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << uint64(k)) | (x >> uint64(64 - k))


@njit(cache=True)
def _next(s):
    s0, s1, s2, s3 = s[0], s[1], s[2], s[3]
    result = _rotl(s0 + s3, 23) + s0
    t = s1 << uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    s[0], s[1], s[2], s[3] = s0, s1, s2, s3
    return result


@njit(cache=True)
def _fill_u64(s, out):
    for i in range(out.size):
        out[i] = _next(s)


@njit(cache=True)
def _fill_uniform(s, out):
    for i in range(out.size):
        out[i] = (_next(s) >> uint64(11)) * _INV_2_53


@njit(cache=True)
def _fill_normal_pairs(s, out):
    # out.size is even; both Box-Muller variates are used
    for i in range(0, out.size, 2):
        u1 = 1.0 - (_next(s) >> uint64(11)) * _INV_2_53
        u2 = (_next(s) >> uint64(11)) * _INV_2_53
        r = math.sqrt(-2.0 * math.log(u1))
        out[i] = r * math.cos(_TWO_PI * u2)
        out[i + 1] = r * math.sin(_TWO_PI * u2)


class Rng:
    """A single sequential stream. Not thread-safe; derive a seed per worker."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self._state = seed_state(self.seed)
        self._spare = None

    def next_u64(self) -> int:
        out = np.empty(1, dtype=np.uint64)
        _fill_u64(self._state, out)
        return int(out[0])

    def uniform(self, size: int) -> np.ndarray:
        out = np.empty(int(size))
        _fill_uniform(self._state, out)
        return out

    def below(self, bound: int) -> int:
        """Unbiased integer in ``[0, bound)`` by rejection."""
        bound = int(bound)
        if bound < 1:
            raise ValueError("bound must be positive")
        limit = ((1 << 64) // bound) * bound
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def normals(self, size: int) -> np.ndarray:
        """Standard normals in stream order; an unused second variate is
        carried over to the next call."""
        size = int(size)
        out = np.empty(size)
        start = 0
        if size and self._spare is not None:
            out[0] = self._spare
            self._spare = None
            start = 1
        rest = size - start
        if rest > 0:
            buf = np.empty(rest + (rest & 1))
            _fill_normal_pairs(self._state, buf)
            out[start:] = buf[:rest]
            if rest & 1:
                self._spare = float(buf[-1])
        return out

    def subset(self, n: int, k: int) -> list:
        """A uniformly random ``k``-subset of ``range(n)`` (partial Fisher-Yates),
        returned sorted."""
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])
