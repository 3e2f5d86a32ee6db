import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randfib.core import Params, lambda_roots, log_z
from randfib.errors import NoRoot
from randfib.lyapunov import (critical_bracket, critical_epsilon, gamma, log_phi, phi,
                              tail_exponent_series, tail_exponent_spectral)
from randfib.spectral import lambda_function

# eps* for (a, b) = (0.5, 0.6) from a 50-digit evaluation of the gamma series (mpmath)
EPS_STAR_GOLDEN = "0.13488999405202668787498763690598194264612434720175"


def mp_gamma(a, b, eps, terms=1400):
    with mpmath.workdps(50):
        ma, mb, e = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(eps)
        z_prev, z = mpmath.mpf(1), ma
        total, w = mpmath.mpf(0), e * e
        for _ in range(terms):
            total += w * mpmath.log(z)
            w *= 1 - e
            z_prev, z = z, ma * z + mb * z_prev
        return total


def test_golden_critical_point_reproduces():
    with mpmath.workdps(50):
        root = mpmath.findroot(lambda e: mp_gamma(0.5, 0.6, e), (mpmath.mpf("0.13"), mpmath.mpf("0.14")),
                               solver="anderson")
        assert abs(root - mpmath.mpf(EPS_STAR_GOLDEN)) < mpmath.mpf(10) ** -40


def test_critical_epsilon_matches_golden():
    lo, hi = critical_bracket(0.5, 0.6, 1e-12)
    assert hi - lo < 1e-12
    assert lo <= float(EPS_STAR_GOLDEN) <= hi
    assert critical_epsilon(0.5, 0.6) == pytest.approx(float(EPS_STAR_GOLDEN), abs=1e-10)


@pytest.mark.parametrize("eps", [0.05, 0.2, 0.5, 0.9])
def test_gamma_series_against_high_precision(pair, eps):
    g = gamma(Params(*pair, eps))
    assert g.tail_bound < 1e-13
    assert g.gamma == pytest.approx(float(mp_gamma(*pair, eps, terms=3000)), abs=2e-13)


def test_gamma_endpoints(pair):
    p = Params(*pair, 0.0)
    assert gamma(p).gamma == math.log(lambda_roots(p).lambda1)
    assert gamma(p.with_eps(1.0)).gamma == math.log(p.a)
    # the series itself approaches the endpoint values
    assert gamma(p.with_eps(1 - 1e-8)).gamma == pytest.approx(math.log(p.a), abs=1e-6)
    assert gamma(p.with_eps(1e-4)).gamma == pytest.approx(math.log(lambda_roots(p).lambda1), abs=1e-3)


def test_gamma_slope_at_zero():
    # gamma(eps) = log lambda1 + eps log(lambda1 / (lambda1 - lambda2)) + O(eps^2)
    p = Params(0.5, 0.6, 0.0)
    r = lambda_roots(p)
    h = 1e-5
    slope = (gamma(p.with_eps(h)).gamma - gamma(p.with_eps(0.0)).gamma) / h
    assert slope == pytest.approx(math.log(r.lambda1 / (r.lambda1 - r.lambda2)), abs=1e-4)


def test_gamma_strictly_decreasing(pair):
    g = [gamma(Params(*pair, round(0.02 * i, 12))).gamma for i in range(51)]
    assert np.all(np.diff(g) < 0)
    lam1 = lambda_roots(Params(*pair, 0.0)).lambda1
    assert all(math.log(pair[0]) <= x <= math.log(lam1) for x in g)


def test_sign_equivalences(pair):
    star = critical_epsilon(*pair)
    for eps in np.linspace(0.01, 0.6, 30):
        p = Params(*pair, float(eps))
        positive = gamma(p).gamma > 0
        assert positive == (eps < star)
        if abs(eps - star) < 1e-6:
            continue
        try:
            tail_exponent_spectral(p)
            has_root = True
        except NoRoot:
            has_root = False
        assert has_root == positive


def test_critical_bracket_certificate(pair):
    tol = 1e-10
    star = critical_epsilon(*pair, tol)
    assert gamma(Params(*pair, star - 10 * tol)).gamma > 0 > gamma(Params(*pair, star + 10 * tol)).gamma


def test_critical_point_vanishes_at_boundary():
    a = 0.5
    stars = [critical_epsilon(a, 1 - a + 0.01 * 2.0 ** -j) for j in range(6)]
    assert all(x > y for x, y in zip(stars, stars[1:]))
    assert stars[-1] < stars[0] / 10


def test_phi_basics(pair):
    p = Params(*pair, 0.05)
    assert log_phi(p, 0.0) == 0.0
    h = 1e-6
    slope = (phi(p, h) - phi(p, -h)) / (2 * h)
    assert slope == pytest.approx(-gamma(p).gamma / p.eps, rel=1e-5)
    s = np.linspace(0.2, 6.0, 30)
    vals = np.array([phi(p, x) for x in s])
    assert np.all(vals[:-2] - 2 * vals[1:-1] + vals[2:] >= -1e-10)


def test_phi_tail_bound_is_rigorous():
    p = Params(0.3, 0.9, 0.1)
    s = 1.3
    n = 20_000
    t = np.arange(1, n + 1)
    direct = np.logaddexp.reduce(math.log(p.eps) + (t - 1) * math.log1p(-p.eps) - s * log_z(p, n)[1:])
    assert log_phi(p, s) == pytest.approx(direct, abs=1e-14)


@pytest.mark.parametrize("frac", [1 / 7, 3 / 7, 6 / 7])
def test_dual_methods_agree(pair, frac):
    p = Params(*pair, critical_epsilon(*pair) * frac)
    s1 = tail_exponent_series(p)
    s2 = tail_exponent_spectral(p)
    assert abs(s1.s - s2.s) < 1e-6
    assert s1.residual < 1e-12 and abs(lambda_function(p, s1.s, 1e-12)) < 1e-6
    assert s1.bracket[0] <= s1.s <= s1.bracket[1]
    assert (s1.method, s2.method) == ("scalarSeries", "spectralRoot")


def test_tail_exponent_limits():
    a, b = 0.5, 0.6
    star = critical_epsilon(a, b)
    near = [tail_exponent_series(Params(a, b, star * (1 - 2.0 ** -j))).s for j in range(2, 8)]
    assert all(x > y for x, y in zip(near, near[1:])) and near[-1] < 0.05
    # growth is slow (roughly log(1/eps)) but unbounded
    small = [tail_exponent_series(Params(a, b, 2.0 ** -j)).s for j in range(3, 17, 2)]
    assert all(x < y for x, y in zip(small, small[1:])) and small[-1] > 14


def test_no_root_above_critical(pair):
    p = Params(*pair, min(1.2 * critical_epsilon(*pair), 0.99))
    with pytest.raises(NoRoot):
        tail_exponent_series(p)
    with pytest.raises(NoRoot):
        tail_exponent_spectral(p)
    with pytest.raises(NoRoot):
        tail_exponent_series(p.with_eps(0.0))


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([(0.5, 0.6), (0.3, 0.9), (0.8, 0.25)]), st.floats(0.05, 0.95))
def test_s_strictly_decreasing(pair, u):
    star = critical_epsilon(*pair)
    e0, e1 = u * star * 0.9, u * star
    assert tail_exponent_series(Params(*pair, e0)).s > tail_exponent_series(Params(*pair, e1)).s
