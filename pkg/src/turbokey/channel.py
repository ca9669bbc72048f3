"""Correlated log-normal turbulence on N receiving branches.

Each branch transmittance ``eta_i`` is log-normal; ``ln eta`` is jointly
Gaussian with common mean ``mu0``, common variance ``sigma0_sq`` and one
pairwise correlation ``rho``. The receivers only ever see the channel
through ``sum(eta_i)`` (photon counting) or ``sum(sqrt(eta_i))`` (homodyne),
and both sums are replaced by single log-normals whose first two moments
match the true ones (Fenton-Wilkinson).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Slack for eta_bar round-tripping through ln/exp at eta_bar == 1.
_ETA_SLACK = 1e-12


@dataclass(frozen=True)
class TurbulenceParams:
    n_branches: int
    mu0: float
    sigma0_sq: float
    rho: float = 0.0

    def __post_init__(self):
        if int(self.n_branches) != self.n_branches or self.n_branches < 1:
            raise DomainError(f"n_branches must be a positive integer, got {self.n_branches}")
        if not math.isfinite(self.mu0):
            raise DomainError("mu0 must be finite")
        if not (self.sigma0_sq >= 0.0 and math.isfinite(self.sigma0_sq)):
            raise DomainError(f"sigma0_sq must be >= 0, got {self.sigma0_sq}")
        if self.n_branches > 1:
            rho_min = -1.0 / (self.n_branches - 1)
            if not rho_min <= self.rho <= 1.0:
                raise DomainError(
                    f"rho={self.rho} makes the covariance indefinite; need {rho_min:g} <= rho <= 1"
                )
        if self.eta_bar > 1.0 + _ETA_SLACK:
            raise DomainError(f"total mean transmittance {self.eta_bar:g} exceeds 1")

    @classmethod
    def from_eta0(cls, n_branches, eta0, sigma0_sq, rho=0.0):
        """Build from the per-branch mean transmittance."""
        if not eta0 > 0.0:
            raise DomainError(f"eta0 must be positive, got {eta0}")
        return cls(n_branches, math.log(eta0) - 0.5 * sigma0_sq, sigma0_sq, rho)

    @classmethod
    def from_eta_bar(cls, n_branches, eta_bar, sigma0_sq, rho=0.0):
        """Build from the total mean transmittance N * eta0."""
        if not 0.0 < eta_bar <= 1.0 + _ETA_SLACK:
            raise DomainError(f"eta_bar must lie in (0, 1], got {eta_bar}")
        return cls.from_eta0(n_branches, eta_bar / n_branches, sigma0_sq, rho)

    @property
    def sigma0(self):
        return math.sqrt(self.sigma0_sq)

    @property
    def eta0(self):
        return mean_transmittance(self)

    @property
    def eta_bar(self):
        return self.n_branches * mean_transmittance(self)


@dataclass(frozen=True)
class LognormalDist:
    mu: float
    sigma_sq: float

    def __post_init__(self):
        if not self.sigma_sq >= 0.0:
            raise DomainError(f"sigma_sq must be >= 0, got {self.sigma_sq}")
        if not math.isfinite(self.mean):
            raise DomainError("log-normal mean overflows")

    @property
    def sigma(self):
        return math.sqrt(self.sigma_sq)

    def moment(self, k):
        return math.exp(k * self.mu + 0.5 * k * k * self.sigma_sq)

    @property
    def mean(self):
        return self.moment(1)

    @property
    def second_moment(self):
        return self.moment(2)


def mean_transmittance(params: TurbulenceParams) -> float:
    return math.exp(params.mu0 + 0.5 * params.sigma0_sq)


def fenton_wilkinson(n_branches, mu0, sigma0_sq, rho) -> LognormalDist:
    """Log-normal matching the first two moments of a sum of N equicorrelated log-normals."""
    n = n_branches
    log_spread = math.log1p((n - 1) * math.exp((rho - 1.0) * sigma0_sq))
    return LognormalDist(
        mu=1.5 * math.log(n) + mu0 - 0.5 * log_spread,
        sigma_sq=max(0.0, -math.log(n) + sigma0_sq + log_spread),
    )


def fw_equiv_kennedy(params: TurbulenceParams) -> LognormalDist:
    """Approximate law of ``sum(eta_i)``."""
    return fenton_wilkinson(params.n_branches, params.mu0, params.sigma0_sq, params.rho)


def fw_equiv_homodyne(params: TurbulenceParams) -> LognormalDist:
    """Approximate law of ``sum(sqrt(eta_i))``.

    ``sqrt(eta_i)`` is log-normal with halved location and quartered
    variance; the correlation of the logs is unchanged.
    """
    return fenton_wilkinson(params.n_branches, 0.5 * params.mu0, 0.25 * params.sigma0_sq, params.rho)


def sum_moments(n_branches, mu0, sigma0_sq, rho):
    """Exact E[S] and E[S^2] for S the sum of N equicorrelated log-normals."""
    n = n_branches
    first = n * math.exp(mu0 + 0.5 * sigma0_sq)
    second = n * math.exp(2.0 * mu0 + 2.0 * sigma0_sq) + n * (n - 1) * math.exp(
        2.0 * mu0 + (1.0 + rho) * sigma0_sq
    )
    return first, second


def lognormal_pdf(dist: LognormalDist, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("log-normal density is defined for t > 0 only")
    if dist.sigma_sq == 0.0:
        raise DomainError("degenerate log-normal (sigma_sq = 0) has no density")
    z = np.log(t) - dist.mu
    p = np.exp(-z * z / (2.0 * dist.sigma_sq)) / (t * math.sqrt(2.0 * math.pi * dist.sigma_sq))
    return float(p) if p.ndim == 0 else p


def equicorrelated_sqrt(n_branches, rho):
    """Coefficients (a, c) with (a I + c J)^2 = (1 - rho) I + rho J.

    J is the all-ones matrix. The square root exists exactly when the
    right-hand side is positive semidefinite.
    """
    n = n_branches
    if n > 1 and not -1.0 / (n - 1) <= rho <= 1.0:
        raise DomainError(f"rho={rho} gives an indefinite covariance for N={n}")
    a = math.sqrt(max(0.0, 1.0 - rho)) if n > 1 else 1.0
    b = math.sqrt(max(0.0, 1.0 + (n - 1) * rho)) if n > 1 else 1.0
    return a, (b - a) / n
