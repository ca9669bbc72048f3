import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from turbokey import quadrature
from turbokey.channel import LognormalDist
from turbokey.errors import DomainError
from turbokey.quadrature import QuadSpec, binary_entropy, bisect, integrate_lognormal, logistic_entropy, q_function

DIST = LognormalDist(-2.0, 0.1)


def test_normalisation_and_first_moment():
    assert integrate_lognormal(np.ones_like, DIST) == pytest.approx(1.0, abs=1e-10)
    assert integrate_lognormal(lambda t: t, DIST) == pytest.approx(DIST.mean, rel=1e-10)


def test_laplace_transform_against_riemann_sum():
    # 1e8-point midpoint rule in u = (ln t - mu) / sigma over [-10, 10], chunked
    mu, sigma, a = DIST.mu, DIST.sigma, 8.0
    n, lo, hi = 10**8, -10.0, 10.0
    h = (hi - lo) / n
    total = 0.0
    for start in range(0, n, 10**7):
        u = lo + h * (np.arange(start, start + 10**7) + 0.5)
        total += np.sum(np.exp(-a * np.exp(mu + sigma * u) - 0.5 * u * u))
    oracle = total * h / math.sqrt(2 * math.pi)
    got = integrate_lognormal(lambda t: np.exp(-a * t), DIST)
    assert got == pytest.approx(oracle, rel=1e-8)


def test_point_mass_bypasses_quadrature():
    dist = LognormalDist(math.log(0.3), 0.0)
    assert integrate_lognormal(lambda t: t**2, dist) == pytest.approx(0.09, rel=1e-15)
    assert integrate_lognormal(lambda t: t, dist, QuadSpec(support=(0.5, math.inf))) == 0.0


def test_clipped_support_matches_scipy():
    spec = QuadSpec(support=(0.14, math.inf))
    got = integrate_lognormal(lambda t: np.exp(-3 * t), DIST, spec)
    dens = stats.lognorm(s=DIST.sigma, scale=math.exp(DIST.mu)).pdf
    ref, _ = integrate.quad(lambda t: math.exp(-3 * t) * dens(t), 0.14, 5.0, epsabs=1e-14, epsrel=1e-12)
    assert got == pytest.approx(ref, rel=1e-9)


@given(
    st.floats(-3, 0.5),
    st.floats(0.01, 1.0),
    st.floats(-2, 2),
    st.floats(-2, 2),
)
@settings(max_examples=40, deadline=None)
def test_linear_in_integrand(mu, s2, c1, c2):
    dist = LognormalDist(mu, s2)
    f = lambda t: np.exp(-2 * t)
    g = lambda t: 1 / (1 + t)
    lhs = integrate_lognormal(lambda t: c1 * f(t) + c2 * g(t), dist)
    rhs = c1 * integrate_lognormal(f, dist) + c2 * integrate_lognormal(g, dist)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("support", [None, (0.12, math.inf)])
def test_support_widening_is_invisible(monkeypatch, support):
    spec = QuadSpec(support=support)
    f = lambda t: np.exp(-8 * t)
    narrow = integrate_lognormal(f, DIST, spec)
    monkeypatch.setattr(quadrature, "SUPPORT_SIGMAS", 10.0)
    wide = integrate_lognormal(f, DIST, spec)
    assert wide == pytest.approx(narrow, rel=spec.rel_tol)


def test_non_convergence_reports_estimates():
    spec = QuadSpec(max_subdivisions=2, support=(0.1, math.inf))
    with pytest.raises(quadrature.NumericalError) as info:
        integrate_lognormal(lambda t: np.sin(1e4 * t), DIST, spec)
    assert len(info.value.estimates) == 2


def test_integrate_interval_vectorised():
    a = np.array([0.0, 1.0, -2.0])
    b = np.array([1.0, 3.0, 2.0])
    got = quadrature.integrate_interval(lambda x: x**3 + 1, a, b)
    np.testing.assert_allclose(got, (b**4 - a**4) / 4 + (b - a), rtol=1e-13)


def test_bisect_basic():
    assert bisect(lambda x: x - 1, 0.0, 2.0) == pytest.approx(1.0, abs=1e-10)
    assert bisect(lambda x: x * x - 2, 0.0, 2.0) == pytest.approx(math.sqrt(2), abs=1e-10)
    with pytest.raises(DomainError):
        bisect(lambda x: x * x + 1, -1.0, 1.0)


@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_bisect_independent_of_bracket(extra_lo, extra_hi):
    g = lambda x: math.tanh(x - 0.7)
    assert bisect(g, 0.0 - extra_lo, 2.0 + extra_hi, tol=1e-12) == pytest.approx(0.7, abs=1e-11)


def test_binary_entropy_values():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0, abs=1e-15)
    ref = float(-mpmath.mpf("0.11") * mpmath.log(mpmath.mpf("0.11"), 2) - mpmath.mpf("0.89") * mpmath.log(mpmath.mpf("0.89"), 2))
    assert binary_entropy(0.11) == pytest.approx(ref, rel=1e-14)
    assert binary_entropy(0.11) == pytest.approx(0.499916, abs=1e-6)
    for bad in (-0.1, 1.1, float("nan")):
        with pytest.raises(DomainError):
            binary_entropy(bad)


@given(st.floats(0, 1), st.floats(0, 1))
def test_binary_entropy_concave_and_symmetric(p, q):
    assert binary_entropy(0.5 * (p + q)) >= 0.5 * (binary_entropy(p) + binary_entropy(q)) - 1e-12
    assert binary_entropy(p) == pytest.approx(binary_entropy(1 - p), abs=1e-12)


@pytest.mark.parametrize("z", [0.0, 1e-8, 0.3, 5.0, 40.0, 300.0, -7.0])
def test_logistic_entropy_matches_high_precision(z):
    with mpmath.workdps(200):
        p = 1 / (1 + mpmath.e ** (-mpmath.mpf(z)))
        ref = -p * mpmath.log(p, 2) - (1 - p) * mpmath.log(1 - p, 2)
    assert logistic_entropy(z) == pytest.approx(float(ref), rel=1e-13, abs=1e-300)


def test_q_function():
    assert q_function(0.0) == 0.5
    assert q_function(-math.inf) == 1.0
    assert q_function(math.inf) == 0.0
    oracle, _ = integrate.quad(lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi), 1.0, math.inf, epsabs=1e-14)
    assert q_function(1.0) == pytest.approx(oracle, rel=1e-12)
    assert q_function(1.0) == pytest.approx(0.158655, abs=1e-6)
