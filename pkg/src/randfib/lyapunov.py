"""Lyapunov exponent gamma(eps), the critical noise eps*, and the tail exponent s_eps."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .core import Params, lambda_roots, log_z, validate_params
from .errors import NoRoot
from .spectral import lambda_function


@dataclass(frozen=True)
class GammaResult:
    eps: float
    gamma: float
    truncation: int
    tail_bound: float


@dataclass(frozen=True)
class TailExponent:
    eps: float
    s: float
    method: str  # "scalarSeries" | "spectralRoot"
    bracket: tuple[float, float]
    residual: float


def _gamma_tail_bound(params: Params, n: int) -> float:
    # |log Z_k| <= k M by interlacing (a <= Z_k/Z_{k-1} <= (a^2+b)/a), and
    # sum_{k>n} eps^2 q^{k-1} k = q^n (1 + n eps)
    a, b, eps = params.a, params.b, params.eps
    m = max(-math.log(a), math.log((a * a + b) / a))
    return m * (1.0 - eps) ** n * (1.0 + n * eps)


def gamma(params: Params, tol: float = 1e-13) -> GammaResult:
    """gamma(eps) = sum_{n>=1} eps^2 (1-eps)^{n-1} log Z_n, truncated with a rigorous tail bound."""
    eps = params.eps
    if eps == 0.0:
        return GammaResult(eps, math.log(lambda_roots(params, 0.0).lambda1), 0, 0.0)
    if eps == 1.0:
        return GammaResult(eps, math.log(params.a), 1, 0.0)
    n = 16
    while _gamma_tail_bound(params, n) >= tol:
        n *= 2
    lo, hi = n // 2, n
    while hi - lo > 1:  # smallest n meeting the bound
        mid = (lo + hi) // 2
        if _gamma_tail_bound(params, mid) < tol:
            hi = mid
        else:
            lo = mid
    n = hi
    k = np.arange(1, n + 1)
    weights = np.exp(2.0 * math.log(eps) + (k - 1) * math.log1p(-eps))
    value = float(np.dot(weights, log_z(params, n)[1:]))
    return GammaResult(eps, value, n, _gamma_tail_bound(params, n))


def critical_bracket(a: float, b: float, tol: float = 1e-10) -> tuple[float, float]:
    """Bisection bracket (lo, hi) of width < tol with gamma(lo) > 0 > gamma(hi)."""
    p = validate_params(a, b, 0.0)
    lo, hi = 0.0, 1.0
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if gamma(p.with_eps(mid)).gamma > 0.0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def critical_epsilon(a: float, b: float, tol: float = 1e-10) -> float:
    """The unique eps* in (0,1) with gamma(eps*) = 0."""
    lo, hi = critical_bracket(a, b, tol)
    return 0.5 * (lo + hi)


def _phi_terms(params: Params, s: float, n: int) -> np.ndarray:
    eps = params.eps
    t = np.arange(1, n + 1)
    return math.log(eps) + (t - 1) * math.log1p(-eps) - s * log_z(params, n)[1:]


def _phi_tail_log(params: Params, s: float, n: int) -> float:
    # Z_t >= Z_n r^{t-n} for t > n with r the smaller of the next two ratios (interlacing)
    lz = log_z(params, n + 2)
    log_r = min(lz[n + 1] - lz[n], lz[n + 2] - lz[n + 1])
    log_q = math.log1p(-params.eps)
    x = log_q - s * log_r
    if x >= 0.0:
        return math.inf
    return math.log(params.eps) + n * log_q - s * lz[n] - s * log_r - math.log(-math.expm1(x))


def log_phi(params: Params, s: float, tol: float = 1e-15) -> float:
    """log E[X_T^{-s}] = log sum_t eps(1-eps)^{t-1} Z_t^{-s}, T the first regeneration time."""
    if s == 0.0:
        return 0.0
    n = 64
    while True:
        head = logsumexp(_phi_terms(params, s, n))
        if _phi_tail_log(params, s, n) - head < math.log(tol):
            return float(head)
        n *= 2


def phi(params: Params, s: float, tol: float = 1e-15) -> float:
    return math.exp(log_phi(params, s, tol))


def _bracket_root(fn, cap: float) -> tuple[float, float]:
    """Bracket the positive root of a convex fn with fn(0)=0, fn'(0)<0."""
    s = 1.0
    if fn(s) < 0.0:
        lo = s
        while fn(2.0 * lo) < 0.0:
            lo *= 2.0
            if lo > cap:
                raise NoRoot(f"no sign change below cap={cap}")
        return lo, 2.0 * lo
    hi = s
    while True:
        s = hi / 2.0
        if s < 1e-12:
            raise NoRoot("function stays nonnegative near 0 (eps >= eps*?)")
        if fn(s) < 0.0:
            return s, hi
        hi = s


def tail_exponent_series(params: Params, tol: float = 1e-12, cap: float = 1e4) -> TailExponent:
    """Positive root of E[X_T^{-s}] = 1."""
    if params.eps <= 0.0 or gamma(params).gamma <= 0.0:
        raise NoRoot(f"gamma(eps={params.eps}) <= 0 or eps = 0: no finite tail exponent")
    fn = lambda s: log_phi(params, s)
    lo, hi = _bracket_root(fn, cap)
    s = brentq(fn, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    return TailExponent(params.eps, s, "scalarSeries", (lo, hi), abs(phi(params, s) - 1.0))


def tail_exponent_spectral(params: Params, tol: float = 1e-12, cap: float = 512.0) -> TailExponent:
    """Positive root of Lambda_eps(s) = 0."""
    if params.eps <= 0.0 or params.eps >= 1.0:
        raise NoRoot(f"eps={params.eps}: no positive root of Lambda")
    # Lambda'(0) = -gamma; without this guard, truncation noise near s = 0 can fake a sign change
    if gamma(params).gamma <= 0.0:
        raise NoRoot(f"gamma(eps={params.eps}) <= 0: Lambda has no positive root")
    fn = lambda s: lambda_function(params, s, tol=min(tol, 1e-12))
    lo, hi = _bracket_root(fn, cap)
    s = brentq(fn, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    return TailExponent(params.eps, s, "spectralRoot", (lo, hi), abs(fn(s)))
