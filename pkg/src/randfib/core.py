"""Model parameters, the deterministic sequence Z_n, characteristic roots and state ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import IndexOutOfRange, OutOfRange, SequenceOverflow

ADMISSIBLE = "a in (0,1) and b > 1 - a"


@dataclass(frozen=True)
class Params:
    """Coefficients of X_{n+1} = a X_n + b eta_{n-1} X_{n-1} and the reset probability eps."""

    a: float
    b: float
    eps: float

    def __post_init__(self):
        a, b, eps = self.a, self.b, self.eps
        if not (0.0 < a < 1.0):
            raise OutOfRange("a", a, "a in (0,1)")
        if not (b > 1.0 - a):
            raise OutOfRange("b", b, "b > 1 - a")
        if not (0.0 <= eps <= 1.0):
            raise OutOfRange("eps", eps, "eps in [0,1]")

    def with_eps(self, eps: float) -> Params:
        return replace(self, eps=float(eps))


def validate_params(a: float, b: float, eps: float) -> Params:
    return Params(float(a), float(b), float(eps))


@dataclass(frozen=True)
class Roots:
    lambda1: float
    lambda2: float
    eps: float


def lambda_roots(params: Params, eps: float | None = None) -> Roots:
    """Roots of lambda^2 = a lambda + b(1-eps); eps defaults to ``params.eps``.

    The small root comes from the product lambda1*lambda2 = -b(1-eps), which avoids the
    cancellation in (a - sqrt(...))/2 when b(1-eps) is tiny.
    """
    if eps is None:
        eps = params.eps
    if not (0.0 <= eps <= 1.0):
        raise OutOfRange("eps", eps, "eps in [0,1]")
    a, c = params.a, params.b * (1.0 - eps)
    lam1 = 0.5 * (a + math.sqrt(a * a + 4.0 * c))
    lam2 = -c / lam1
    return Roots(lam1, lam2, eps)


@lru_cache(maxsize=64)
def _log_z_prefix(a: float, b: float, n: int) -> np.ndarray:
    # S_1 = 1/a, S_{k+1} = 1/(a + b S_k); log Z_n = -sum_{k<=n} log S_k
    s = np.empty(n + 1)
    s[0] = 1.0
    s[1] = 1.0 / a
    for k in range(1, n):
        s[k + 1] = 1.0 / (a + b * s[k])
    out = np.zeros(n + 1)
    np.cumsum(-np.log(s[1:]), out=out[1:])
    out.setflags(write=False)
    return out


def log_z(params: Params, n: int) -> np.ndarray:
    """Read-only array ``log Z_0 .. log Z_n`` (shared cache; never overflows)."""
    size = 64
    while size < n:
        size *= 2
    return _log_z_prefix(params.a, params.b, size)[: n + 1]


@dataclass(frozen=True, eq=False)
class ZTable:
    """Prefix Z_0..Z_N of the noiseless sequence.

    ``log_values`` is canonical. ``values`` raises SequenceOverflow once Z_N is beyond
    the double range.
    """

    params: Params
    log_values: np.ndarray
    _linear: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.log_values) - 1

    @property
    def values(self) -> np.ndarray:
        if not np.all(np.isfinite(self._linear)):
            raise SequenceOverflow(
                f"Z_{self.n_max} exceeds the double range; use log_values")
        return self._linear

    def ratio(self, k: int) -> float:
        return state_ratio(self, k)


def z_table(params: Params, n: int) -> ZTable:
    if n < 1:
        raise ValueError("N must be >= 1")
    a, b = params.a, params.b
    z = np.empty(n + 1)
    z[0], z[1] = 1.0, a
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n):
            z[k + 1] = a * z[k] + b * z[k - 1]
    z.setflags(write=False)
    return ZTable(params, log_z(params, n), z)


def z_closed_form(params: Params, n: int) -> float:
    """Z_n = (lambda1^{n+1} - lambda2^{n+1}) / (lambda1 - lambda2) at eps = 0."""
    r = lambda_roots(params, 0.0)
    return (r.lambda1 ** (n + 1) - r.lambda2 ** (n + 1)) / (r.lambda1 - r.lambda2)


def state_ratio(table: ZTable, k: int) -> float:
    """S_k = Z_{k-1}/Z_k, the k-th state of the ratio chain R_n = X_n / X_{n+1}."""
    if not 1 <= k <= table.n_max:
        raise IndexOutOfRange(f"k={k} outside 1..{table.n_max}")
    if k == 1:
        return 1.0 / table.params.a
    return math.exp(table.log_values[k - 1] - table.log_values[k])


def state_ratios(params: Params, k_max: int) -> np.ndarray:
    """Array ``S_1..S_{k_max}`` (index 0 holds S_1)."""
    lz = log_z(params, k_max)
    s = np.exp(lz[:-1] - lz[1:])
    s[0] = 1.0 / params.a
    return s


def z_exact(params: Params, n: int) -> list[Fraction]:
    """Z_0..Z_n in exact rational arithmetic on the binary values of a and b.

    Float tables cannot resolve Z_{n-1}Z_{n+1} - Z_n^2 = (-1)^{n+1} b^n once b^n drops
    below an ulp of Z_n^2, nor strict interlacing once the ratios agree to double
    precision; this table can.
    """
    a, b = Fraction(params.a), Fraction(params.b)
    z = [Fraction(1), a]
    for _ in range(1, n):
        z.append(a * z[-1] + b * z[-2])
    return z[: n + 1]


def below_lambda1(params: Params, r: Fraction) -> bool:
    """Exact test r < lambda1 for r > 0 (lambda1 is the positive root of x^2 = a x + b)."""
    a, b = Fraction(params.a), Fraction(params.b)
    return r * r - a * r - b < 0
