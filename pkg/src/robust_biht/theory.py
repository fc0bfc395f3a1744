"""Universal constants and the bound calculator.

``b`` is a configuration constant (379.1038); every other constant is
computed from it.
"""
from __future__ import annotations

import decimal
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, PreconditionError

__all__ = [
    "A_CONST",
    "B_CONST",
    "UniversalConstants",
    "constants",
    "log_binom",
    "m0",
    "adversarial_term",
    "raic_rhs",
    "r_offset",
    "epsilon0",
    "error_recurrence",
    "closed_form_bound",
    "recurrence_high_precision",
    "fact_recurrence_pair",
    "recurrence_substitution",
    "TheoryParams",
]

A_CONST = 16.0
B_CONST = 379.1038

# printed enclosing intervals; c's upper end widened by 1e-4
INTERVALS = {
    "c1": (1.3469, 1.3470),
    "c2": (0.3806, 0.3807),
    "c3": (1.1834, 1.1835),
    "c4": (9.0898, 9.0899),
    "c": (31.9999, 32.0001),
}


@dataclass(frozen=True)
class UniversalConstants:
    a: float
    b: float
    c1: float
    c2: float
    c3: float
    c4: float
    c: float

    def checks(self) -> dict:
        out = {}
        for name, (lo, hi) in INTERVALS.items():
            v = getattr(self, name)
            out[name] = {"value": v, "interval": [lo, hi], "ok": lo < v < hi}
        return out


def constants(b: float = B_CONST) -> UniversalConstants:
    pi = math.pi
    c1 = math.sqrt(3 * pi / b) * (1 + 16 * math.sqrt(2) / 3)
    c2 = (3 / b) * (1 + 4 * pi / 3 + 8 * math.sqrt(3 * pi) / 3 + 8 * math.sqrt(6 * pi))
    c3 = 13 * math.sqrt(pi) / math.sqrt(b)
    c4 = 2 + 4 * math.sqrt(pi)
    c = 4 * (c1 + math.sqrt(c1**2 + c2)) ** 2
    return UniversalConstants(A_CONST, b, c1, c2, c3, c4, c)


_C = constants()


def _unit_interval(name, value, allow_zero=False):
    ok = (0.0 <= value <= 1.0) if allow_zero else (0.0 < value <= 1.0)
    if not ok:
        raise InvalidArgument(f"{name} must lie in {'[0, 1]' if allow_zero else '(0, 1]'}, got {value}")


def log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def m0(delta: float, n: int, k: int, rho: float) -> float:
    """``(b/delta) log(C(n,k)^2 C(n,2k) (12b/delta)^(2k) (3a/rho))``, in log space."""
    _unit_interval("delta", delta)
    _unit_interval("rho", rho)
    if k < 1 or n < 2 * k:
        raise InvalidArgument(f"need k >= 1 and n >= 2k, got n={n}, k={k}")
    b, a = _C.b, _C.a
    log_arg = (
        2 * log_binom(n, k)
        + log_binom(n, 2 * k)
        + 2 * k * math.log(12 * b / delta)
        + math.log(3 * a / rho)
    )
    return (b / delta) * log_arg


def adversarial_term(delta: float, tau: float) -> float:
    """``c3 sqrt(delta tau) + c4 tau sqrt(log(2e/tau))``."""
    if not (0.0 <= delta <= 1.0):
        raise InvalidArgument(f"delta must lie in [0, 1], got {delta}")
    _unit_interval("tau", tau)
    return _C.c3 * math.sqrt(delta * tau) + _C.c4 * tau * math.sqrt(math.log(2 * math.e / tau))


def raic_rhs(delta: float, d: float, tau: float) -> float:
    if not (0.0 <= d <= 2.0):
        raise InvalidArgument(f"sphere distance must lie in [0, 2], got {d}")
    _unit_interval("delta", delta)
    return _C.c1 * math.sqrt(delta * d) + _C.c2 * delta + adversarial_term(delta, tau)


def r_offset(epsilon: float, tau: float) -> float:
    """Adversarial offset ``(c/c2) * adversarial_term(epsilon/c, tau)``."""
    _unit_interval("epsilon", epsilon)
    _unit_interval("tau", tau)
    return (_C.c / _C.c2) * adversarial_term(epsilon / _C.c, tau)


def epsilon0(epsilon: float, tau: float) -> float:
    """Asymptotic error level ``epsilon + r``; ``tau = 0`` means no corruption."""
    _unit_interval("tau", tau, allow_zero=True)
    if tau == 0:
        _unit_interval("epsilon", epsilon)
        return epsilon
    return epsilon + r_offset(epsilon, tau)


def error_recurrence(gamma: float, T: int) -> np.ndarray:
    """``e(0) = 2``, ``e(t) = 4 c1 sqrt(gamma/c * e(t-1)) + 4 c2 gamma / c``."""
    _unit_interval("gamma", gamma)
    if T < 0:
        raise InvalidArgument("T must be nonnegative")
    e = np.empty(T + 1)
    e[0] = 2.0
    for t in range(1, T + 1):
        e[t] = 4 * _C.c1 * math.sqrt(gamma / _C.c * e[t - 1]) + 4 * _C.c2 * gamma / _C.c
    return e


def closed_form_bound(gamma: float, t) -> float:
    """``2^(2^-t) * gamma^(1 - 2^-t)``."""
    if gamma <= 0:
        raise InvalidArgument("gamma must be positive")
    p = 2.0 ** (-float(t))
    return 2.0**p * gamma ** (1.0 - p)


def recurrence_high_precision(gamma: float, T: int, digits: int = 60):
    """:func:`error_recurrence` and :func:`closed_form_bound` in ``digits``-digit
    decimal arithmetic, returned as two lists of ``Decimal``.

    Doubles hit the fixed point after a few dozen steps, which hides strict
    decrease. Here ``c`` is rebuilt from ``c1`` and ``c2`` at full precision
    so the fixed point sits at ``gamma`` to ``digits`` digits.
    """
    _unit_interval("gamma", gamma)
    if T < 0:
        raise InvalidArgument("T must be nonnegative")
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        D = decimal.Decimal
        c1, c2, g = D(_C.c1), D(_C.c2), D(gamma)
        c = 4 * (c1 + (c1 * c1 + c2).sqrt()) ** 2
        e = [D(2)]
        for _ in range(T):
            e.append(4 * c1 * (g / c * e[-1]).sqrt() + 4 * c2 * g / c)
        bound = []
        for t in range(T + 1):
            p = D(2) ** -t
            bound.append(D(2) ** p * g ** (1 - p))
    return e, bound


def fact_recurrence_pair(v: float, w: float, T: int):
    """Sequences ``f1(t) = v w + sqrt(v f1(t-1))`` (``f1(0) = 2``) and
    ``f2(t) = 2^(2^-t) (u^2 v)^(1-2^-t)`` with ``u = (1 + sqrt(1 + 4w))/2``.

    Requires ``1 <= u <= sqrt(2/v)``.
    """
    if v <= 0 or w < 0:
        raise InvalidArgument("need v > 0 and w >= 0")
    u = 0.5 * (1 + math.sqrt(1 + 4 * w))
    if u < 1:  # pragma: no cover - impossible for w >= 0
        raise PreconditionError(f"u = {u} < 1")
    if u > math.sqrt(2 / v):
        raise PreconditionError(f"u = {u} exceeds sqrt(2/v) = {math.sqrt(2 / v)}")
    f1 = np.empty(T + 1)
    f1[0] = 2.0
    for t in range(1, T + 1):
        f1[t] = v * w + math.sqrt(v * f1[t - 1])
    f2 = np.array([2.0 ** (2.0**-t) * (u * u * v) ** (1 - 2.0**-t) for t in range(T + 1)])
    return f1, f2, u


def recurrence_substitution(gamma: float) -> tuple[float, float]:
    """``(v, w)`` that turn :func:`error_recurrence` into ``f1``."""
    return 16 * _C.c1**2 * gamma / _C.c, _C.c2 / (4 * _C.c1**2)


@dataclass(frozen=True)
class TheoryParams:
    n: int
    k: int
    m: int
    tau: float
    epsilon: float
    rho: float

    def __post_init__(self):
        if self.n < 2 * self.k:
            raise InvalidArgument("need n >= 2k")
        for name in ("tau", "epsilon", "rho"):
            _unit_interval(name, getattr(self, name))

    @property
    def delta(self) -> float:
        return self.epsilon / _C.c

    @property
    def r(self) -> float:
        return r_offset(self.epsilon, self.tau)

    @property
    def epsilon0(self) -> float:
        return self.epsilon + self.r

    @property
    def m0(self) -> float:
        return m0(self.delta, self.n, self.k, self.rho)

