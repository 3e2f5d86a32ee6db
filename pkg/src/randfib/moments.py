"""Exact first and second moments of X_n, plus an enumeration oracle.

Second-order quantities come from a coupled linear recursion in
Y_n = E[X_n^2] and H_n = E[X_{n-1} X_{n+1} - X_n^2]:

    H_1     = b(1-eps)
    H_{n+1} = -b(1-eps) H_n - b^2 eps(1-eps) Y_{n-1}
    Y_{n+1} = (a^2 + 2b(1-eps)) Y_n + b^2(1-eps)(2 eps - 1) Y_{n-1} + 2b(1-eps) H_n

for n >= 1, with Y_0 = 1 and Y_1 = a^2.  The recursion is homogeneous, so it is run
with a common power-of-two scale to give log-scale companions past double overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Params, lambda_roots
from .errors import SequenceOverflow, TooLarge

MAX_ENUM_DEPTH = 24
_BLOCK_BITS = 15


def mean_x(params: Params, n: int) -> float:
    """E[X_n] = (l1^{n+1} - l2^{n+1}) / (l1 - l2) with the eps-dependent roots."""
    r = lambda_roots(params)
    try:
        value = (r.lambda1 ** (n + 1) - r.lambda2 ** (n + 1)) / (r.lambda1 - r.lambda2)
    except OverflowError:
        value = math.inf
    if not math.isfinite(value):
        raise SequenceOverflow(f"E[X_{n}] overflows; use log_mean_x")
    return value


def log_mean_x(params: Params, n: int) -> float:
    r = lambda_roots(params)
    ratio = r.lambda2 / r.lambda1
    return ((n + 1) * math.log(r.lambda1) + math.log1p(-ratio ** (n + 1))
            - math.log(r.lambda1 - r.lambda2))


def mean_x_recursive(params: Params, n: int) -> float:
    """E[X_n] from the two-term recursion m_{n+1} = a m_n + b(1-eps) m_{n-1}."""
    a, c = params.a, params.b * (1.0 - params.eps)
    prev, cur = 1.0, a
    if n == 0:
        return prev
    for _ in range(n - 1):
        prev, cur = cur, a * cur + c * prev
    return cur


def _second_order(params: Params, n_max: int):
    """Scaled Y_0..Y_{n_max+1} and H_1..H_{n_max+1}, plus per-index log2 scale."""
    a, b, eps = params.a, params.b, params.eps
    q = 1.0 - eps
    c_y1 = a * a + 2.0 * b * q
    c_y0 = b * b * q * (2.0 * eps - 1.0)
    c_yh = 2.0 * b * q
    c_hh = -b * q
    c_hy = -b * b * eps * q

    size = n_max + 2
    y = np.empty(size)
    h = np.full(size, np.nan)
    scale = np.zeros(size, dtype=np.int64)
    y[0], y[1], h[1] = 1.0, a * a, b * q
    y_prev, y_cur, h_cur, e = 1.0, a * a, b * q, 0
    for n in range(1, size - 1):
        y_next = c_y1 * y_cur + c_y0 * y_prev + c_yh * h_cur
        h_next = c_hh * h_cur + c_hy * y_prev
        y_prev, y_cur, h_cur = y_cur, y_next, h_next
        if y_cur > 2.0 ** 500 or 0.0 < y_cur < 2.0 ** -500:
            shift = -math.frexp(y_cur)[1]
            y_prev = math.ldexp(y_prev, shift)
            y_cur = math.ldexp(y_cur, shift)
            h_cur = math.ldexp(h_cur, shift)
            e -= shift
        y[n + 1], h[n + 1], scale[n + 1] = y_cur, h_cur, e
    return y, h, scale


def _unscale(x: float, e: int, what: str) -> float:
    try:
        value = math.ldexp(x, int(e))
    except OverflowError:
        value = math.inf
    if not math.isfinite(value):
        raise SequenceOverflow(f"{what} overflows; use the log-scale variant")
    return value


def second_moment_x(params: Params, n: int) -> float:
    """Y_n = E[X_n^2]."""
    y, _, s = _second_order(params, max(n, 1))
    return _unscale(y[n], s[n], f"E[X_{n}^2]")


def log_second_moment_x(params: Params, n: int) -> float:
    y, _, s = _second_order(params, max(n, 1))
    return math.log(y[n]) + s[n] * math.log(2.0)


def cassini_h1(params: Params) -> float:
    """E[X_0 X_2 - X_1^2] = b(1-eps)."""
    return params.b * (1.0 - params.eps)


def cassini_expectation(params: Params, n: int) -> float:
    """E[h_{n+1}] = E[X_n X_{n+2} - X_{n+1}^2] for n >= 1.

    Reduces to (-1)^n b^{n+1} when eps = 0 and to 0 when eps = 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1; E[h_1] is cassini_h1")
    _, h, s = _second_order(params, n)
    return _unscale(h[n + 1], s[n + 1], f"E[h_{n + 1}]")


def second_moment_growth_rate(params: Params) -> float:
    """lim (1/n) log E[X_n^2]: log spectral radius of the (X_n^2, X_{n-1}X_n, X_{n-1}^2) transfer."""
    a, b, q = params.a, params.b, 1.0 - params.eps
    m = np.array([[a * a, 2 * a * b * q, b * b * q], [a, b * q, 0.0], [1.0, 0.0, 0.0]])
    return math.log(max(abs(np.linalg.eigvals(m))))


def cross_moment(params: Params, n: int, k: int) -> float:
    """U_{n,k} = E[X_n X_{n+k}] via U_{n,k+1} = a U_{n,k} + b(1-eps) U_{n,k-1}."""
    a, b, q = params.a, params.b, 1.0 - params.eps
    y, h, s = _second_order(params, n + 1)
    if s[n] != s[n + 1]:
        y_n = math.ldexp(y[n], int(s[n] - s[n + 1]))
    else:
        y_n = y[n]
    u0 = y_n
    if k == 0:
        return _unscale(u0, s[n + 1], f"U_{n},0")
    # E[X_n X_{n+2}] = Y_{n+1} + H_{n+1} = a U_{n,1} + b(1-eps) Y_n
    u1 = (y[n + 1] + h[n + 1] - b * q * y_n) / a
    for _ in range(k - 1):
        u0, u1 = u1, a * u1 + b * q * u0
    return _unscale(u1, s[n + 1], f"U_{n},{k}")


@dataclass(frozen=True)
class MomentTable:
    params: Params
    mean: np.ndarray
    second: np.ndarray
    cassini: np.ndarray  # cassini[n] = E[h_n] for n >= 1; cassini[0] is nan


def moment_table(params: Params, n_max: int) -> MomentTable:
    y, h, s = _second_order(params, n_max)
    second = np.ldexp(y[: n_max + 1], s[: n_max + 1])
    cass = np.ldexp(h[: n_max + 1], s[: n_max + 1])
    mean = np.array([mean_x(params, n) for n in range(n_max + 1)])
    return MomentTable(params, mean, second, cass)


@dataclass(frozen=True)
class MomentBundle:
    """Exact-by-enumeration moments at index n."""

    n: int
    mean: float
    second: float
    cassini: float  # E[X_{n-1} X_{n+1} - X_n^2]; nan for n = 0
    cross: dict = field(default_factory=dict)  # k -> E[X_n X_{n+k}]
    patterns: int = 0


def brute_force_moments(params: Params, n: int, ks=(1, 2, 3, 4)) -> MomentBundle:
    """Enumerate every eta pattern that X_0..X_{n+max k} depend on.

    Patterns are processed in blocks of 2^15 consecutive indices; each block is summed in
    index order and the block sums are reduced in block order, so the result does not
    depend on how blocks are scheduled.
    """
    ks = tuple(sorted(set(int(k) for k in ks)))
    if n > MAX_ENUM_DEPTH:
        raise TooLarge(f"n={n} > {MAX_ENUM_DEPTH}")
    top = max([n + 1] + [n + k for k in ks])  # largest X index needed
    depth = max(top - 1, 0)  # X_j depends on eta_0..eta_{j-2}
    if depth > MAX_ENUM_DEPTH:
        raise TooLarge(f"enumeration depth {depth} > {MAX_ENUM_DEPTH}")

    a, b, eps = params.a, params.b, params.eps
    total = 1 << depth
    block = min(total, 1 << _BLOCK_BITS)
    idx = np.arange(block, dtype=np.int64)
    names = ["mean", "second", "cassini"] + [f"k{k}" for k in ks]
    sums = {name: [] for name in names}
    for start in range(0, total, block):
        p = idx + start
        w = np.ones(block)
        etas = []
        for i in range(depth):
            eta = ((p >> i) & 1).astype(np.float64)
            w *= np.where(eta > 0, 1.0 - eps, eps)
            etas.append(eta)
        xs = [np.ones(block), np.full(block, a)]
        for j in range(1, top):
            xs.append(a * xs[j] + b * etas[j - 1] * xs[j - 1])
        xn = xs[n]
        sums["mean"].append(np.sum(w * xn))
        sums["second"].append(np.sum(w * xn * xn))
        if n >= 1:
            sums["cassini"].append(np.sum(w * (xs[n - 1] * xs[n + 1] - xn * xn)))
        for k in ks:
            sums[f"k{k}"].append(np.sum(w * xn * xs[n + k]))

    def reduce(vals):
        return math.fsum(vals) if vals else math.nan

    cross = {0: reduce(sums["second"])}
    cross.update({k: reduce(sums[f"k{k}"]) for k in ks})
    return MomentBundle(n, reduce(sums["mean"]), reduce(sums["second"]),
                        reduce(sums["cassini"]), cross, total)
