"""Ratio chain R_n = X_n / X_{n+1}: kernels, truncated Perron roots, and Lambda_eps(t).

States are indexed 1, 2, ... with state k sitting at S_k = Z_{k-1}/Z_k.  Arrays below are
0-based, so state k lives at position k-1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .core import Params, lambda_roots, state_ratios
from .errors import Degenerate, NoConvergence


class KernelKind(str, Enum):
    FORWARD = "forward"      # H~(i,j) = eps 1(j=1) + (1-eps) 1(j=i+1)
    REVERSED = "reversed"    # H(i,j)  = eps(1-eps)^{j-1} 1(i=1) + 1(i=j+1)
    SUBMARKOV = "submarkov"  # Theta(i,j) = (1-eps) 1(j=i+1)


class TailPolicy(str, Enum):
    DISCARD = "discard"
    ABSORB_LIMIT = "absorbLimit"


@dataclass(frozen=True)
class KernelSpec:
    params: Params
    kind: KernelKind = KernelKind.FORWARD
    tilt: float = 0.0


@dataclass(frozen=True, eq=False)
class TruncatedKernel:
    spec: KernelSpec
    K: int
    tail_policy: TailPolicy
    entries: sp.csr_matrix


@dataclass(frozen=True, eq=False)
class PerronResult:
    alpha: float
    f: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class LambdaValue:
    eps: float
    t: float
    value: float
    K: int
    residual: float


def _tilted(s: np.ndarray, t: float) -> np.ndarray:
    if t == 0.0:
        return np.ones_like(s)
    with np.errstate(over="ignore"):
        w = np.exp(t * np.log(s))
    if not np.all(np.isfinite(w)):
        raise NoConvergence(f"tilt t={t} overflows the double range")
    return w


def forward_kernel_row(params: Params, i: int, tilt: float = 0.0) -> list[tuple[int, float]]:
    """Nonzero entries (j, weight) of row i of the tilted forward kernel."""
    eps = params.eps
    s = state_ratios(params, i + 1)
    row = []
    if eps > 0.0:
        row.append((1, float(eps * s[0] ** tilt)))
    if eps < 1.0:
        row.append((i + 1, float((1.0 - eps) * s[i] ** tilt)))
    return row


def reversed_kernel_row(params: Params, i: int, cutoff: int = 64) -> tuple[list[tuple[int, float]], float]:
    """Row i of the time-reversed kernel; for i = 1 the geometric row up to ``cutoff``.

    Returns (entries, tail_mass) where tail_mass is the probability beyond the cutoff.
    """
    if i > 1:
        return [(i - 1, 1.0)], 0.0
    eps = params.eps
    entries = [(j, eps * (1.0 - eps) ** (j - 1)) for j in range(1, cutoff + 1)]
    return entries, (1.0 - eps) ** cutoff


def stationary_mass(params: Params, k: int) -> float:
    """Q(R_n = S_k) = eps (1-eps)^{k-1}."""
    eps = params.eps
    if eps <= 0.0 or eps >= 1.0:
        raise Degenerate(f"no geometric stationary law at eps={eps}")
    return eps * (1.0 - eps) ** (k - 1)


def truncated_kernel(spec: KernelSpec, K: int,
                     tail_policy: TailPolicy | str = TailPolicy.ABSORB_LIMIT) -> TruncatedKernel:
    """K x K truncation.

    Under absorbLimit the mass leaving state K towards K+1 is kept as a self-loop on K,
    weighted by lambda1^{-t} (the limit of S_j^t).
    """
    tail_policy = TailPolicy(tail_policy)
    kind = KernelKind(spec.kind)
    p, t = spec.params, spec.tilt
    eps = p.eps
    w = _tilted(state_ratios(p, K + 1), t)
    lim = lambda_roots(p, 0.0).lambda1 ** (-t)
    rows, cols, vals = [], [], []

    def add(i, j, v):
        if v != 0.0:
            rows.append(i)
            cols.append(j)
            vals.append(v)

    if kind in (KernelKind.FORWARD, KernelKind.SUBMARKOV):
        for i in range(K):
            if kind is KernelKind.FORWARD:
                add(i, 0, eps * w[0])
            if i + 1 < K:
                add(i, i + 1, (1.0 - eps) * w[i + 1])
            elif tail_policy is TailPolicy.ABSORB_LIMIT:
                add(i, i, (1.0 - eps) * lim)
    else:
        for j in range(K):
            add(0, j, eps * (1.0 - eps) ** j * w[j])
        if tail_policy is TailPolicy.ABSORB_LIMIT:
            add(0, K - 1, (1.0 - eps) ** K * lim)
        for i in range(1, K):
            add(i, i - 1, w[i - 1])
    m = sp.csr_matrix((vals, (rows, cols)), shape=(K, K))
    m.sum_duplicates()
    return TruncatedKernel(spec, K, tail_policy, m)


def perron(kernel: TruncatedKernel, tol: float = 1e-10, max_iter: int = 10 ** 6,
           f0: np.ndarray | None = None) -> PerronResult:
    """Power iteration normalised by f(1) = 1.

    Stops once the scale-free residual sup|H f - alpha f| / (alpha sup|f|) drops below tol.
    """
    A = kernel.entries
    f = np.ones(kernel.K) if f0 is None else np.array(f0, dtype=float)
    f /= f[0]
    for it in range(1, max_iter + 1):
        g = A @ f
        alpha = g[0]
        if not (alpha > 0.0 and math.isfinite(alpha)):
            raise NoConvergence(f"lost positivity at iteration {it} (alpha={alpha})")
        residual = float(np.max(np.abs(g - alpha * f)) / (alpha * np.max(np.abs(f))))
        if residual < tol:
            return PerronResult(float(alpha), f, residual, it)
        f = g / alpha
    raise NoConvergence(f"no convergence after {max_iter} iterations (residual {residual:.3e})")


def lambda_detail(params: Params, t: float, tol: float = 1e-10, K0: int = 64,
                  K_max: int = 1 << 16, max_iter: int = 10 ** 6) -> LambdaValue:
    """Lambda_eps(t) with the truncation size used and the final Perron residual."""
    eps = params.eps
    if t == 0.0:
        return LambdaValue(eps, t, 0.0, 0, 0.0)
    if eps == 0.0:
        return LambdaValue(eps, t, -t * math.log(lambda_roots(params, 0.0).lambda1), 0, 0.0)
    if eps == 1.0:
        return LambdaValue(eps, t, -t * math.log(params.a), 0, 0.0)

    spec = KernelSpec(params, KernelKind.FORWARD, t)
    K, prev, f = K0, None, None
    while K <= K_max:
        res = perron(truncated_kernel(spec, K), tol=tol, max_iter=max_iter, f0=f)
        value = math.log(res.alpha)
        if prev is not None and abs(value - prev) < tol:
            return LambdaValue(eps, t, value, K, res.residual)
        prev = value
        f = np.concatenate([res.f, np.full(K, res.f[-1])])
        K *= 2
    raise NoConvergence(f"truncation did not stabilise up to K={K_max}")


def lambda_function(params: Params, t: float, tol: float = 1e-10) -> float:
    """Lambda_eps(t) = lim (1/n) log E[X_n^{-t}], the log Perron root of the tilted kernel."""
    return lambda_detail(params, t, tol).value


def log_moment_exact(params: Params, t: float, n: int) -> float:
    """log E[X_n^{-t}] for the default start (1, a), by propagating the tilted chain n-1 steps.

    Uses X_n = a / (R_1 ... R_{n-1}) with R_0 = S_1; the cost is O(n^2).  Any real t works,
    so t = -1 reproduces log E[X_n].
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    eps = params.eps
    s_t = np.exp(t * np.log(state_ratios(params, n)))
    v = np.zeros(n)
    v[0] = 1.0
    log_scale = -t * math.log(params.a)
    for step in range(1, n):
        head = eps * v[:step].sum()
        v[1:step + 1] = (1.0 - eps) * v[:step]
        v[0] = head
        v[:step + 1] *= s_t[:step + 1]
        peak = v[:step + 1].max()
        v[:step + 1] /= peak
        log_scale += math.log(peak)
    return log_scale + math.log(v.sum())


def eps_shift_bounds(params: Params, eps1: float, t: float) -> tuple[float, float]:
    """Stated (lower, upper) bounds on Lambda_{eps1}(t) - Lambda_eps(t) for eps < eps1.

    lower = t (eps1-eps) log(1 + b/(a^2+b)), upper = t ((eps1-eps)/eps1) log(1 + b/a^2).
    The lower one is not a true bound everywhere (see tests); both are returned as stated.
    """
    a, b, eps = params.a, params.b, params.eps
    if not eps < eps1 <= 1.0:
        raise ValueError("need eps < eps1 <= 1")
    lower = t * (eps1 - eps) * math.log1p(b / (a * a + b))
    upper = t * ((eps1 - eps) / eps1) * math.log1p(b / (a * a))
    return lower, upper


def small_eps_bound(params: Params, t: float, horizon: int = 4096) -> float | None:
    """Upper bound log[u^t (1 - eps(k0+1)) + v^t eps(k0+1)] on Lambda_eps(t).

    u = (1 + 1/lambda1)/2 at eps = 0, v = 1/a, and k0 is the last k with S_k >= u.
    Returns None when eps >= 1/(k0+1), where the bound is not claimed.
    """
    lam1 = lambda_roots(params, 0.0).lambda1
    u, v = 0.5 * (1.0 + 1.0 / lam1), 1.0 / params.a
    s = state_ratios(params, horizon)
    above = np.nonzero(s >= u)[0]
    k0 = int(above[-1]) + 1 if len(above) else 0
    w = params.eps * (k0 + 1)
    if w >= 1.0:
        return None
    return math.log(u ** t * (1.0 - w) + v ** t * w)
