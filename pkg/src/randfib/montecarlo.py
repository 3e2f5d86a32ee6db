"""Seeded simulation of X_n, R_n and W_n, with ergodic, moment and tail estimators."""
from __future__ import annotations

import importlib.util
import math
import os
import time
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import prange
from scipy import stats
from scipy.special import logsumexp

from .core import Params
from .errors import DegenerateSample, NonPositive
from .rng import stream_key, uniform_at

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe (and its version warning) when OpenMP is available
    _omp = importlib.util.find_spec("numba.np.ufunc.omppool") is not None
    numba.config.THREADING_LAYER = "omp" if _omp else "workqueue"

_BIG = 2.0 ** 500
_SMALL = 2.0 ** -500
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class SimConfig:
    params: Params
    n: int
    m: int
    seed: int = 0
    initial: tuple[float, float] | None = None  # (X_0, X_1); default (1, a)

    def __post_init__(self):
        if self.n < 2 or self.m < 1:
            raise ValueError(f"need n >= 2 and m >= 1 (got n={self.n}, m={self.m})")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        x0, x1 = self.start
        if not (x0 > 0.0 and x1 > 0.0):
            raise ValueError("initial values must be positive")

    @property
    def start(self) -> tuple[float, float]:
        return self.initial if self.initial is not None else (1.0, self.params.a)


@dataclass(frozen=True, eq=False)
class SampleSet:
    kind: str  # "logX" or "W"
    values: np.ndarray
    config: SimConfig
    elapsed: float = 0.0
    log_values: np.ndarray | None = field(default=None, repr=False)


@numba.njit(parallel=True, cache=True)
def _log_x_kernel(a, b, eps, n, seed, x0, x1, out):
    for j in prange(out.shape[0]):
        key = stream_key(seed, j)
        xp, xc, e = x0, x1, 0
        for k in range(1, n):
            if uniform_at(key, k - 1) >= eps:
                xn = a * xc + b * xp
            else:
                xn = a * xc
            xp, xc = xc, xn
            if xc > _BIG:
                xp *= _SMALL
                xc *= _SMALL
                e += 500
            elif xc < _SMALL:
                xp *= _BIG
                xc *= _BIG
                e -= 500
        out[j] = math.log(xc) + e * _LN2


@numba.njit(cache=True)
def _log_x_path_kernel(a, b, eps, n, seed, traj, x0, x1, out):
    key = stream_key(seed, traj)
    xp, xc, e = x0, x1, 0
    out[0] = math.log(x0)
    out[1] = math.log(x1)
    for k in range(1, n):
        if uniform_at(key, k - 1) >= eps:
            xn = a * xc + b * xp
        else:
            xn = a * xc
        xp, xc = xc, xn
        if xc > _BIG:
            xp *= _SMALL
            xc *= _SMALL
            e += 500
        elif xc < _SMALL:
            xp *= _BIG
            xc *= _BIG
            e -= 500
        out[k + 1] = math.log(xc) + e * _LN2


@numba.njit(parallel=True, cache=True)
def _w_kernel(a, b, eps, n, seed, r0, out_w, out_e):
    # W_{k+1} = R_k (W_k + 1), R_k = 1/(a + b eta_{k-1} R_{k-1}); W stored as w * 2^e
    for j in prange(out_w.shape[0]):
        key = stream_key(seed, j)
        r = r0
        w = r0
        e = 0
        unit = 1.0
        for k in range(1, n):
            if uniform_at(key, k - 1) >= eps:
                r = 1.0 / (a + b * r)
            else:
                r = 1.0 / a
            w = r * (w + unit)
            if w > _BIG:
                w *= _SMALL
                unit *= _SMALL
                e += 500
        out_w[j] = w
        out_e[j] = e


def set_threads(n: int | None) -> int:
    """Use up to n worker threads (capped by NUMBA_NUM_THREADS); returns the count in use."""
    if n is not None:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()


def simulate_log_x(config: SimConfig) -> SampleSet:
    """log X_n for each of the m trajectories."""
    p = config.params
    x0, x1 = config.start
    out = np.empty(config.m)
    t0 = time.perf_counter()
    _log_x_kernel(p.a, p.b, p.eps, config.n, np.uint64(config.seed), x0, x1, out)
    return SampleSet("logX", out, config, time.perf_counter() - t0)


def log_x_path(config: SimConfig, traj: int = 0) -> np.ndarray:
    """log X_0 .. log X_n along one trajectory (same draws as the batch kernels)."""
    p = config.params
    x0, x1 = config.start
    out = np.empty(config.n + 1)
    _log_x_path_kernel(p.a, p.b, p.eps, config.n, np.uint64(config.seed), np.uint64(traj),
                       x0, x1, out)
    return out


def simulate_w(config: SimConfig) -> SampleSet:
    """W_n = (X_0 + ... + X_{n-1}) / X_n per trajectory via the ratio recursion.

    ``values`` is inf where W_n exceeds the double range; ``log_values`` is always finite.
    """
    p = config.params
    x0, x1 = config.start
    w = np.empty(config.m)
    e = np.empty(config.m, dtype=np.int64)
    t0 = time.perf_counter()
    _w_kernel(p.a, p.b, p.eps, config.n, np.uint64(config.seed), x0 / x1, w, e)
    elapsed = time.perf_counter() - t0
    with np.errstate(over="ignore"):
        values = np.ldexp(w, e)
    return SampleSet("W", values, config, elapsed, np.log(w) + e * _LN2)


def w_direct(config: SimConfig, traj: int = 0) -> float:
    """W_n for one trajectory from its definition, summed in log space."""
    lx = log_x_path(config, traj)
    return float(math.exp(logsumexp(lx[:-1]) - lx[-1]))


def lyapunov_mc(config: SimConfig) -> tuple[float, float]:
    """Mean of (1/n) log X_n over trajectories and its standard error."""
    g = simulate_log_x(config).values / config.n
    se = float(np.std(g, ddof=1) / math.sqrt(len(g))) if len(g) > 1 else math.nan
    return float(np.mean(g)), se


def lambda_mc(params: Params, t: float, n: int, m: int, seed: int = 0) -> tuple[float, float]:
    """(1/n) log of the sample mean of X_n^{-t}, with a delta-method standard error."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0, 0.0
    lx = simulate_log_x(SimConfig(params, n, m, seed)).values
    z = -t * lx
    shift = z.max()
    w = np.exp(z - shift)
    total = w.sum()
    if total * total / np.dot(w, w) < 2.0:
        raise DegenerateSample(f"weight concentrated on one trajectory (n*t={n * t:g}, m={m})")
    mean = total / m
    estimate = (shift + math.log(mean)) / n
    se = float(np.std(w, ddof=1) / (math.sqrt(m) * mean) / n)
    return float(estimate), se


@dataclass(frozen=True)
class HillEstimate:
    s: float
    stderr: float
    k: int


def _log_sample(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        if samples.log_values is not None:
            return np.asarray(samples.log_values)
        samples = samples.values
    x = np.asarray(samples, dtype=float)
    if np.any(x <= 0.0):
        raise NonPositive("tail estimation needs positive samples")
    return np.log(x)


def default_hill_k(m: int) -> int:
    return max(2, int(m ** 0.6 + 1e-9))  # floor, guarding 10**5 ** 0.6 = 999.99...


def hill_estimator(samples, k: int | None = None) -> HillEstimate:
    """Hill estimate of the tail index from the k largest order statistics."""
    lx = _log_sample(samples)
    m = len(lx)
    if k is None:
        k = default_hill_k(m)
    if not 2 <= k < m:
        raise ValueError(f"need 2 <= k < m (k={k}, m={m})")
    top = -np.sort(-lx)[: k + 1]
    if not np.isfinite(top[k]):
        raise NonPositive("threshold order statistic is not positive")
    spread = float(np.sum(top[:k] - top[k]))
    if spread <= 0.0:
        raise DegenerateSample("top order statistics are all equal")
    s = k / spread
    return HillEstimate(s, s / math.sqrt(k), k)


@dataclass(frozen=True)
class TailConstant:
    per_quantile: dict  # q -> x_q^s q
    pooled: float


def tail_constant_estimate(samples, s: float, quantiles=(0.01, 0.005, 0.002)) -> TailConstant:
    """K_hat(q) = x_q^s * q with x_q the empirical (1-q)-quantile; pooled value is the median."""
    lx = _log_sample(samples)
    est = {}
    for q in quantiles:
        if not 0.0 < q <= 0.1:
            raise ValueError(f"tail probability {q} outside (0, 0.1]")
        log_xq = float(np.quantile(lx, 1.0 - q))
        est[q] = math.exp(s * log_xq) * q
    return TailConstant(est, float(np.median(list(est.values()))))


def ks_distance(x, y) -> float:
    return float(stats.ks_2samp(np.asarray(x), np.asarray(y)).statistic)
