"""Invariant suite behind ``randfib verify``.

Every check yields one row (check, value, threshold, passed).  Rows come out in a fixed
order and depend only on (scale, seed), so the CSV body is reproducible across runs and
thread counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Params, below_lambda1, lambda_roots, z_closed_form, z_exact, z_table
from .csvio import CurveResult
from .lyapunov import critical_bracket, critical_epsilon, gamma, tail_exponent_series, tail_exponent_spectral
from .moments import brute_force_moments, cross_moment, moment_table
from .montecarlo import SimConfig, hill_estimator, lyapunov_mc, simulate_log_x, simulate_w
from .spectral import eps_shift_bounds, lambda_function, small_eps_bound

PAIRS = ((0.5, 0.6), (0.3, 0.9), (0.8, 0.25))
MOMENT_GRID = [(a, b, e) for a in (0.3, 0.5, 0.8) for b in (0.8, 1.2) for e in (0.1, 0.5, 0.9)]
COLUMNS = ["check", "value", "threshold", "passed"]


@dataclass(frozen=True)
class Scale:
    moment_n: int
    eps_points: int
    t_grid: tuple
    mc_n: int
    mc_m: int
    w_m: int


SCALES = {
    "quick": Scale(10, 3, (0.5, 2.0), 10_000, 50, 5_000),
    "full": Scale(16, 6, (0.25, 0.5, 1.0, 2.0, 4.0), 100_000, 200, 20_000),
}


def _rel(x, y):
    return abs(x - y) / max(abs(y), 1e-300)


def identity_errors(a: float, b: float, n: int = 60) -> dict:
    """Noiseless-sequence identities for indices up to n.

    The float table is compared with the closed form and with the exact rational table;
    Cassini and interlacing are checked on the exact table (see ``z_exact``).
    """
    p = Params(a, b, 0.0)
    z = z_table(p, n).values
    exact = z_exact(p, n)
    closed = max(_rel(z_closed_form(p, k), z[k]) for k in range(n + 1))
    table = max(_rel(z[k], float(exact[k])) for k in range(n + 1))
    fa, fb = Fraction(a), Fraction(b)
    cassini = max(abs(float((exact[k - 1] * exact[k + 1] - exact[k] ** 2 - (-1) ** (k + 1) * fb ** k)
                            / fb ** k)) for k in range(1, n))
    r = [exact[k] / exact[k - 1] for k in range(1, n + 1)]  # r[k-1] = Z_k / Z_{k-1}
    bad = 0
    for k in range(1, (n - 1) // 2):
        odd_prev, odd = r[2 * k - 2], r[2 * k]       # Z_{2k-1}/Z_{2k-2}, Z_{2k+1}/Z_{2k}
        even, even_prev = r[2 * k + 1], r[2 * k - 1]  # Z_{2k+2}/Z_{2k+1}, Z_{2k}/Z_{2k-1}
        ok = (fa <= odd_prev < odd and below_lambda1(p, odd) and not below_lambda1(p, even)
              and even < even_prev <= (fa * fa + fb) / fa)
        bad += not ok
    vieta = 0.0
    for e in (0.0, 0.25, 0.5, 0.75, 1.0):
        rt = lambda_roots(p, e)
        c = b * (1 - e)
        vieta = max(vieta, abs(rt.lambda1 + rt.lambda2 - a),
                    abs(rt.lambda1 * rt.lambda2 + c) / max(c, 1e-300) if c else 0.0)
    return {"closed_form": closed, "table": table, "cassini": cassini, "interlacing": bad,
            "vieta": vieta}


def moment_oracle_error(n_max: int) -> float:
    worst = 0.0
    for a, b, e in MOMENT_GRID:
        p = Params(a, b, e)
        table = moment_table(p, n_max + 5)
        for n in range(1, n_max + 1):
            bf = brute_force_moments(p, n)
            worst = max(worst, _rel(table.mean[n], bf.mean), _rel(table.second[n], bf.second),
                        _rel(table.cassini[n], bf.cassini))
            for k, v in bf.cross.items():
                worst = max(worst, _rel(cross_moment(p, n, k), v))
    return worst


def eps_grid(a: float, b: float, points: int) -> list[float]:
    lo, hi = critical_bracket(a, b)
    star = 0.5 * (lo + hi)
    return [star * j / (points + 1) for j in range(1, points + 1)]


def run(scale: str = "quick", seed: int = 0) -> CurveResult:
    sc = SCALES[scale]
    out = CurveResult(COLUMNS)

    def row(name, value, threshold, passed):
        out.add(name, float(value), float(threshold), bool(passed))

    # noiseless sequence
    errs = [identity_errors(a, b) for a, b in PAIRS]
    row("z_closed_form_rel", max(e["closed_form"] for e in errs), 1e-10,
        max(e["closed_form"] for e in errs) < 1e-10)
    row("z_table_vs_exact_rel", max(e["table"] for e in errs), 1e-12,
        max(e["table"] for e in errs) < 1e-12)
    row("z_cassini_rel", max(e["cassini"] for e in errs), 1e-10,
        max(e["cassini"] for e in errs) < 1e-10)
    row("z_interlacing_violations", sum(e["interlacing"] for e in errs), 0,
        sum(e["interlacing"] for e in errs) == 0)
    row("roots_vieta", max(e["vieta"] for e in errs), 1e-12, max(e["vieta"] for e in errs) < 1e-12)

    # moments
    worst = moment_oracle_error(sc.moment_n)
    row("moments_vs_enumeration_rel", worst, 1e-12, worst < 1e-12)

    # Lyapunov exponent
    end0 = max(abs(gamma(Params(a, b, 0.0)).gamma - math.log(lambda_roots(Params(a, b, 0.0)).lambda1))
               for a, b in PAIRS)
    # the series at eps just below 1 must approach log a
    end1 = max(abs(gamma(Params(a, b, 1.0 - 1e-9)).gamma - math.log(a)) for a, b in PAIRS)
    row("gamma_eps0_endpoint", end0, 1e-12, end0 < 1e-12)
    row("gamma_eps1_limit", end1, 1e-7, end1 < 1e-7)
    steps = 0
    for a, b in PAIRS:
        g = [gamma(Params(a, b, round(0.02 * i, 12))).gamma for i in range(51)]
        steps += int(np.sum(np.diff(g) >= 0.0))
    row("gamma_nondecreasing_steps", steps, 0, steps == 0)
    width, signs = 0.0, True
    for a, b in PAIRS:
        lo, hi = critical_bracket(a, b, 1e-10)
        width = max(width, hi - lo)
        signs &= gamma(Params(a, b, lo)).gamma > 0.0 > gamma(Params(a, b, hi)).gamma
    row("critical_bracket_width", width, 1e-8, width < 1e-8 and signs)

    p = Params(0.5, 0.6, 0.3)
    g_hat, se = lyapunov_mc(SimConfig(p, sc.mc_n, sc.mc_m, seed))
    z = abs(g_hat - gamma(p).gamma) / se
    row("gamma_mc_zscore", z, 3.0, z < 3.0)

    # tail exponent and Lambda
    diff, drop = 0.0, 0
    lam_zero, convex, jensen, upper, lower, key = 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    for a, b in PAIRS:
        grid = eps_grid(a, b, sc.eps_points)
        s_prev = math.inf
        lam = {}
        for e in grid:
            q = Params(a, b, e)
            s1 = tail_exponent_series(q).s
            s2 = tail_exponent_spectral(q).s
            diff = max(diff, abs(s1 - s2))
            drop += s1 >= s_prev
            s_prev = s1
            lam_zero = max(lam_zero, abs(lambda_function(q, 0.0)))
            g = gamma(q).gamma
            ts = sc.t_grid
            for t in ts:
                v = lambda_function(q, t, tol=1e-12)
                lam[e, t] = v
                jensen = max(jensen, -t * g - v)
                kb = small_eps_bound(q, t)
                if kb is not None:
                    key = max(key, v - kb)
            for t in ts:
                l0, l1, l2 = (lambda_function(q, t * f, tol=1e-12) for f in (0.5, 1.0, 1.5))
                convex = max(convex, l1 - 0.5 * (l0 + l2))
        for e0, e1 in zip(grid, grid[1:]):
            for t in sc.t_grid:
                lo_b, hi_b = eps_shift_bounds(Params(a, b, e0), e1, t)
                d = lam[e1, t] - lam[e0, t]
                upper = max(upper, d - hi_b)
                lower = max(lower, lo_b - d)
    row("tail_exponent_dual_method", diff, 1e-6, diff < 1e-6)
    row("tail_exponent_nondecreasing_steps", drop, 0, drop == 0)
    row("lambda_at_zero", lam_zero, 0.0, lam_zero == 0.0)
    row("lambda_convexity_excess", convex, 1e-8, convex <= 1e-8)
    row("lambda_jensen_excess", jensen, 1e-10, jensen <= 1e-10)
    row("lambda_small_eps_bound_excess", key, 1e-10, key <= 1e-10)
    row("lambda_eps_upper_bound_excess", upper, 1e-10, upper <= 1e-10)
    row("lambda_eps_lower_bound_excess", lower, 1e-10, lower <= 1e-10)

    # simulation
    a, b = PAIRS[0]
    e_lo, e_hi = 0.1, 0.4
    lo_run = simulate_log_x(SimConfig(Params(a, b, e_lo), 2000, 200, seed)).values
    hi_run = simulate_log_x(SimConfig(Params(a, b, e_hi), 2000, 200, seed)).values
    viol = int(np.sum(hi_run > lo_run))
    row("coupling_monotone_violations", viol, 0, viol == 0)
    q = Params(a, b, critical_epsilon(a, b) / 2.0)
    s_true = tail_exponent_series(q).s
    ws = simulate_w(SimConfig(q, 20_000, sc.w_m, seed))
    h = hill_estimator(ws)
    rel = abs(h.s - s_true) / s_true
    row("hill_rel_error", rel, 0.15, rel < 0.15)
    return out
