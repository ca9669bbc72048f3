"""Quadrature, root finding and entropy kernels used by the closed-form paths."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError, NumericalError

LN2 = math.log(2.0)

# Half-width, in standard deviations of ln t, of the log-normal support.
SUPPORT_SIGMAS = 8.0

GH_ORDER = 64
GH_CHECK_ORDER = 96
GL_ORDER = 16


@dataclass(frozen=True)
class QuadSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-9
    max_subdivisions: int = 4096
    # Optional (lo, hi) clip of the integration variable, in t-space.
    support: tuple[float, float] | None = None

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")
        if self.support is not None and not self.support[0] < self.support[1]:
            raise DomainError(f"empty support {self.support}")


DEFAULT_SPEC = QuadSpec()


@functools.lru_cache(maxsize=None)
def _hermite_rule(order):
    # probabilists' Hermite: weight exp(-u^2/2); normalise to the N(0,1) density
    x, w = np.polynomial.hermite_e.hermegauss(order)
    return x, w / math.sqrt(2.0 * math.pi)


@functools.lru_cache(maxsize=None)
def _legendre_rule(order):
    return np.polynomial.legendre.leggauss(order)


def _converged(a, b, spec):
    return np.all(np.abs(a - b) <= np.maximum(spec.abs_tol, spec.rel_tol * np.abs(b)))


def integrate_interval(g: Callable, a, b, spec: QuadSpec = DEFAULT_SPEC):
    """Integrate ``g`` over ``[a, b]`` by composite Gauss-Legendre.

    ``a`` and ``b`` may be arrays of equal shape, in which case one integral
    per element is returned and ``g`` receives arrays of shape
    ``a.shape + (k,)``. The panel count doubles until two successive
    estimates agree for every element.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scalar = a.ndim == 0 and b.ndim == 0
    a, b = np.broadcast_arrays(np.atleast_1d(a), np.atleast_1d(b))
    x0, w0 = _legendre_rule(GL_ORDER)

    def estimate(panels):
        edges = np.linspace(0.0, 1.0, panels + 1)
        left, h = edges[:-1], 1.0 / panels
        frac = (left[:, None] + 0.5 * h * (x0 + 1.0)).ravel()
        weights = np.tile(0.5 * h * w0, panels)
        width = (b - a)[..., None]
        nodes = a[..., None] + width * frac
        return np.sum(g(nodes) * weights, axis=-1) * (b - a)

    panels = 1
    prev = estimate(panels)
    while True:
        panels *= 2
        cur = estimate(panels)
        if _converged(prev, cur, spec):
            return float(cur[0]) if scalar else cur
        if panels >= spec.max_subdivisions:
            raise NumericalError(
                f"composite Gauss-Legendre did not converge with {panels} panels",
                (prev, cur),
            )
        prev = cur


def integrate_lognormal(f: Callable, dist, spec: QuadSpec = DEFAULT_SPEC) -> float:
    """Expectation of ``f(t)`` for ``t`` log-normal with parameters ``dist``.

    ``f`` must accept numpy arrays. Substituting ``t = exp(mu + sigma u)``
    turns the integral into a standard-normal expectation over
    ``u in [-8, 8]``. With no support clip this is evaluated by Gauss-Hermite
    at two orders; if they disagree beyond tolerance, or the support is
    clipped, composite Gauss-Legendre on the truncated window takes over.
    A degenerate distribution (``sigma_sq == 0``) returns ``f(exp(mu))``.
    """
    mu = dist.mu
    sigma = math.sqrt(dist.sigma_sq)
    lo, hi = (-math.inf, math.inf) if spec.support is None else spec.support

    if sigma == 0.0:
        t = math.exp(mu)
        if lo <= t <= hi:
            return float(np.asarray(f(np.array([t])))[0])
        return 0.0

    u_lo, u_hi = -SUPPORT_SIGMAS, SUPPORT_SIGMAS
    if lo > 0.0:
        u_lo = max(u_lo, (math.log(lo) - mu) / sigma)
    if hi < math.inf:
        u_hi = min(u_hi, (math.log(hi) - mu) / sigma) if hi > 0.0 else -math.inf
    if u_lo >= u_hi:
        return 0.0

    def g(u):
        return np.asarray(f(np.exp(mu + sigma * u)), dtype=float) * np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)

    if u_lo == -SUPPORT_SIGMAS and u_hi == SUPPORT_SIGMAS:
        x, w = _hermite_rule(GH_ORDER)
        first = float(np.dot(w, f(np.exp(mu + sigma * x))))
        x, w = _hermite_rule(GH_CHECK_ORDER)
        second = float(np.dot(w, f(np.exp(mu + sigma * x))))
        if _converged(first, second, spec):
            return second

    return integrate_interval(g, u_lo, u_hi, spec)


def bisect(g: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Root of a continuous ``g`` bracketed by ``[lo, hi]``.

    Stops when ``|g(r)| <= tol`` or the bracket has shrunk to a few ulps.
    """
    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0.0:
        raise DomainError(f"no sign change on [{lo}, {hi}]: g = {g_lo}, {g_hi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) <= tol or hi - lo <= 4.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1e-300):
            return mid
        if (g_mid < 0.0) == (g_lo < 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    raise NumericalError(f"bisection did not converge in {max_iter} iterations", (lo, hi))


def binary_entropy(p):
    """H(p) in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)) or np.any(np.isnan(p)):
        raise DomainError("binary entropy needs p in [0, 1]")
    q = np.minimum(p, 1.0 - p)
    h = (special.entr(q) - (1.0 - q) * np.log1p(-q)) / LN2
    h = np.minimum(h, 1.0)  # rounding can overshoot by an ulp near p = 1/2
    return float(h) if h.ndim == 0 else h


def logistic_entropy(z):
    """H(1 / (1 + exp(-z))) in bits, accurate for large |z|.

    With q = expit(-|z|) the entropy in nats reduces to
    q |z| + log1p(exp(-|z|)), which never subtracts nearly equal numbers.
    """
    az = np.abs(np.asarray(z, dtype=float))
    h = np.minimum((special.expit(-az) * az + np.log1p(np.exp(-az))) / LN2, 1.0)
    return float(h) if h.ndim == 0 else h


def q_function(x):
    """Gaussian tail probability P(Z > x)."""
    r = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(r) if r.ndim == 0 else r
