"""Post-selection secret key rates for binary-modulated coherent-state QKD.

Eve taps ``1 - eta_bar`` of the beam at the transmitter, so she holds one of
two coherent states with overlap ``f``. Bob keeps only outcomes whose
effective information ``I_AB`` is at least Eve's ``I_AE``; the key rate is
the expectation of ``I_AB - I_AE`` over the kept outcomes.

Both receivers see the channel through a single equivalent transmittance,
so every key rate is a one-dimensional expectation over a Fenton-Wilkinson
log-normal (plus an inner integral over the quadrature for homodyne).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import TurbulenceParams, fw_equiv_homodyne, fw_equiv_kennedy
from .detection import Receiver, SignalAmplitude
from .errors import DomainError
from .quadrature import (
    DEFAULT_SPEC,
    SUPPORT_SIGMAS,
    QuadSpec,
    binary_entropy,
    bisect,
    integrate_interval,
    integrate_lognormal,
    logistic_entropy,
    q_function,
)

GAP_TOL = 1e-10
BISECT_MAX_ITER = 200
# Inner quadrature window for homodyne: mean +/- this many standard deviations.
X_SUPPORT_SIGMAS = 10.0
# Largest logistic argument considered; logistic_entropy(800) underflows to 0.
_Z_MAX = 800.0


class AttackModel(str, enum.Enum):
    INDIVIDUAL = "individual_helstrom"
    COLLECTIVE = "collective_holevo"

    @classmethod
    def parse(cls, text):
        key = str(text).strip().lower()
        aliases = {"individual": cls.INDIVIDUAL, "helstrom": cls.INDIVIDUAL,
                   "collective": cls.COLLECTIVE, "holevo": cls.COLLECTIVE}
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class SkrResult:
    skr: float
    i_ae: float
    # Kennedy: eta_eq threshold of the dark-count slice. Homodyne: x threshold
    # at the median equivalent transmittance.
    ps_threshold: float
    kept_fraction: float
    # Homodyne only: (eta_eq_hd samples, x thresholds) tracing the region boundary.
    threshold_curve: tuple | None = None


def eve_overlap(beta: SignalAmplitude, eta_bar) -> float:
    """Overlap of Eve's two states, exp(-2 (1 - eta_bar) beta^2)."""
    if not 0.0 < eta_bar <= 1.0 + 1e-12:
        raise DomainError(f"eta_bar must lie in (0, 1], got {eta_bar}")
    return math.exp(-2.0 * max(0.0, 1.0 - eta_bar) * beta.beta_sq)


def i_ae(f, attack: AttackModel):
    """Eve's information per bit from the state overlap ``f``.

    Individual attacks use the Helstrom error of a single-copy measurement;
    collective attacks use the Holevo quantity H((1 - f) / 2).
    """
    f = float(f)
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"overlap must lie in [0, 1], got {f}")
    if AttackModel(attack) is AttackModel.INDIVIDUAL:
        # 1 - sqrt(1 - f^2), written to keep precision for small f
        gap = f * f / (1.0 + math.sqrt(1.0 - f * f))
        return 1.0 - binary_entropy(0.5 * gap)
    return binary_entropy(0.5 * (1.0 - f))


def i_ae_for(beta: SignalAmplitude, params: TurbulenceParams, attack: AttackModel) -> float:
    return i_ae(eve_overlap(beta, params.eta_bar), attack)


def _kennedy_rate(beta, n_branches):
    return 4.0 * beta.beta_sq / n_branches


def i_ab_kennedy(n, eta_eq, beta: SignalAmplitude, n_branches):
    """Bob's information for ``n`` clicks; any click is error-free."""
    if n >= 1:
        return 1.0
    lam = _kennedy_rate(beta, n_branches) * np.asarray(eta_eq, dtype=float)
    r = 1.0 - logistic_entropy(lam)
    return float(r) if np.ndim(r) == 0 else r


def _homodyne_llr_scale(beta, n_branches):
    return 8.0 * beta.beta / n_branches**1.5


def i_ab_homodyne(x, eta_eq_hd, beta: SignalAmplitude, n_branches):
    """Bob's information for quadrature outcome ``x``; even in ``x``."""
    z = _homodyne_llr_scale(beta, n_branches) * np.asarray(x, dtype=float) * np.asarray(eta_eq_hd, dtype=float)
    r = 1.0 - logistic_entropy(z)
    return float(r) if np.ndim(r) == 0 else r


def _logistic_threshold(info):
    """Smallest z >= 0 with 1 - H(expit(z)) >= info, or inf if none below _Z_MAX."""
    if info <= 0.0:
        return 0.0
    gap = lambda z: 1.0 - logistic_entropy(z) - info
    if gap(_Z_MAX) < 0.0:
        return math.inf
    return bisect(gap, 0.0, _Z_MAX, GAP_TOL, BISECT_MAX_ITER)


def ps_threshold_kennedy(beta: SignalAmplitude, params: TurbulenceParams, attack: AttackModel) -> float:
    """Lower edge of the kept ``eta_eq`` range for dark (n = 0) outcomes.

    Returns 0 when everything is kept and ``inf`` when no ``eta_eq`` inside
    the integration support reaches Eve's information.
    """
    info = i_ae_for(beta, params, attack)
    if info <= 0.0:
        return 0.0
    dist = fw_equiv_kennedy(params)
    n = params.n_branches
    t_hi = math.exp(dist.mu + SUPPORT_SIGMAS * dist.sigma)
    gap = lambda t: i_ab_kennedy(0, t, beta, n) - info
    if gap(t_hi) < 0.0:
        return math.inf
    return bisect(gap, 0.0, t_hi, GAP_TOL, BISECT_MAX_ITER)


def ps_threshold_homodyne(eta_eq_hd, beta: SignalAmplitude, params: TurbulenceParams, attack: AttackModel) -> float:
    """``x*`` such that outcomes with ``|x| >= x*`` are kept at this ``eta_eq_hd``.

    Returns ``inf`` when the threshold lies beyond mean + 10 sd of the
    quadrature distribution.
    """
    info = i_ae_for(beta, params, attack)
    if info <= 0.0:
        return 0.0
    n = params.n_branches
    x_hi = beta.beta / math.sqrt(n) * eta_eq_hd + X_SUPPORT_SIGMAS * 0.5 * math.sqrt(n)
    gap = lambda x: i_ab_homodyne(x, eta_eq_hd, beta, n) - info
    if eta_eq_hd <= 0.0 or gap(x_hi) < 0.0:
        return math.inf
    return bisect(gap, 0.0, x_hi, GAP_TOL, BISECT_MAX_ITER)


def skr_kennedy(
    beta: SignalAmplitude,
    params: TurbulenceParams,
    attack: AttackModel,
    spec: QuadSpec = DEFAULT_SPEC,
    truncated_sum: bool = False,
) -> SkrResult:
    """Key rate of the CD-Kennedy receiver.

    Every click carries one full bit, so the photon-number sum collapses to
    the click term ``(1 - e^-lam)/2 * (1 - I_AE)`` plus the dark term
    ``(1 + e^-lam)/2 * (I_AB(0) - I_AE)`` restricted to ``eta_eq >= eta*``.
    ``truncated_sum=True`` instead sums the photon numbers explicitly, as a
    cross-check of the collapse.
    """
    info = i_ae_for(beta, params, attack)
    dist = fw_equiv_kennedy(params)
    n = params.n_branches
    rate = _kennedy_rate(beta, n)
    threshold = ps_threshold_kennedy(beta, params, attack)

    def click_mass(t):
        return -0.5 * np.expm1(-rate * t)

    def dark_mass(t):
        return 0.5 * (1.0 + np.exp(-rate * t))

    if truncated_sum:
        skr = _skr_kennedy_by_photon_sum(beta, dist, n, info, spec)
    else:
        skr = integrate_lognormal(lambda t: click_mass(t) * (1.0 - info), dist, spec)
        if math.isfinite(threshold):
            tail = replace(spec, support=(threshold, math.inf)) if threshold > 0.0 else spec
            skr += integrate_lognormal(
                lambda t: dark_mass(t) * np.maximum(i_ab_kennedy(0, t, beta, n) - info, 0.0), dist, tail
            )

    kept = integrate_lognormal(click_mass, dist, spec)
    if math.isfinite(threshold):
        tail = replace(spec, support=(threshold, math.inf)) if threshold > 0.0 else spec
        kept += integrate_lognormal(dark_mass, dist, tail)
    return SkrResult(max(skr, 0.0), info, threshold, min(max(kept, 0.0), 1.0))


def _skr_kennedy_by_photon_sum(beta, dist, n_branches, info, spec):
    from scipy import special, stats

    rate = _kennedy_rate(beta, n_branches)
    lam_max = rate * math.exp(dist.mu + SUPPORT_SIGMAS * dist.sigma)
    n_max = int(stats.poisson.isf(1e-12, lam_max)) + 1 if lam_max > 0 else 0
    counts = np.arange(n_max + 1)

    def integrand(t):
        lam = rate * t[..., None]
        with np.errstate(divide="ignore"):
            log_pmf = counts * np.log(lam) - lam - special.gammaln(counts + 1)
        pmf = np.where(lam > 0, np.exp(log_pmf), (counts == 0).astype(float))
        p_n = 0.5 * ((counts == 0) + pmf)
        # p_e for n = 0 is the posterior of bit 1; for n >= 1 it is 0
        p_err = np.where(counts == 0, pmf / ((counts == 0) + pmf), 0.0)
        i_ab = 1.0 - binary_entropy(p_err)
        return np.sum(p_n * np.maximum(i_ab - info, 0.0), axis=-1)

    return integrate_lognormal(integrand, dist, spec)


def skr_homodyne(
    beta: SignalAmplitude,
    params: TurbulenceParams,
    attack: AttackModel,
    spec: QuadSpec = DEFAULT_SPEC,
) -> SkrResult:
    """Key rate of the homodyne receiver.

    Outer expectation over the equivalent transmittance ``S``; inner integral
    over ``x >= x*(S)`` doubled by the ``x -> -x`` symmetry. ``I_AB`` depends
    on ``x * S`` only, so ``x*(S) = z* N^1.5 / (8 beta S)`` with ``z*`` found
    once.
    """
    info = i_ae_for(beta, params, attack)
    dist = fw_equiv_homodyne(params)
    n = params.n_branches
    median = math.exp(dist.mu)
    if beta.beta == 0.0:
        return SkrResult(0.0, info, 0.0, 1.0)

    z_star = _logistic_threshold(info)
    scale = _homodyne_llr_scale(beta, n)
    sd = 0.5 * math.sqrt(n)
    offset = beta.beta / math.sqrt(n)

    def x_threshold(t):
        return z_star / (scale * t)

    def inner(t):
        t = np.asarray(t, dtype=float)
        mean = offset * t
        lo = x_threshold(t)
        hi = mean + X_SUPPORT_SIGMAS * sd
        active = lo < hi
        out = np.zeros_like(t)
        if not np.any(active):
            return out
        ta, ma, la, ha = t[active], mean[active], lo[active], hi[active]

        def g(x):
            tt, mm = ta[:, None], ma[:, None]
            dens = 0.5 * (np.exp(-(x - mm) ** 2 / (2 * sd * sd)) + np.exp(-(x + mm) ** 2 / (2 * sd * sd)))
            dens /= sd * math.sqrt(2.0 * math.pi)
            gap = 1.0 - logistic_entropy(scale * x * tt) - info
            return np.maximum(gap, 0.0) * dens

        out[active] = 2.0 * integrate_interval(g, la, ha, spec)
        return out

    def kept_mass(t):
        mean = offset * t
        lo = x_threshold(t)
        return q_function((lo - mean) / sd) + q_function((lo + mean) / sd)

    if math.isinf(z_star):
        skr, kept = 0.0, 0.0
    else:
        skr = integrate_lognormal(inner, dist, spec)
        kept = integrate_lognormal(kept_mass, dist, spec)

    samples = np.exp(dist.mu + dist.sigma * np.linspace(-4.0, 4.0, 9))
    curve = (samples, x_threshold(samples))
    return SkrResult(max(skr, 0.0), info, float(x_threshold(median)), min(max(kept, 0.0), 1.0), curve)


def skr(receiver, beta: SignalAmplitude, params: TurbulenceParams, attack: AttackModel, spec: QuadSpec = DEFAULT_SPEC):
    if Receiver(receiver) is Receiver.KENNEDY:
        return skr_kennedy(beta, params, attack, spec)
    return skr_homodyne(beta, params, attack, spec)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def optimize_beta(params: TurbulenceParams, attack: AttackModel, receiver, beta_sq_range=(0.1, 6.0), grid_points=32, rel_tol=1e-4):
    """Maximise the key rate over the mean photon number.

    A log-spaced grid locates the best cell, then golden-section search
    refines inside the neighbouring cells. Returns ``(beta_sq_opt, skr_opt)``.
    """
    lo, hi = float(beta_sq_range[0]), float(beta_sq_range[1])
    if not 0.0 < lo <= hi:
        raise DomainError(f"need 0 < lower <= upper for the beta^2 range, got {beta_sq_range}")

    def objective(b2):
        return skr(receiver, SignalAmplitude.from_photons(b2), params, attack).skr

    if lo == hi:
        return lo, objective(lo)
    grid = np.geomspace(lo, hi, grid_points)
    values = np.array([objective(b2) for b2 in grid])
    best = int(np.argmax(values))
    if values[best] <= 0.0:
        return 0.5 * (lo + hi), 0.0

    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, grid_points - 1)]
    c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > rel_tol * 0.5 * (a + b):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
    candidates = [(values[best], grid[best]), (fc, c), (fd, d)]
    skr_opt, beta_sq_opt = max(candidates)
    return float(beta_sq_opt), float(skr_opt)
