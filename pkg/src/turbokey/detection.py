"""Bit-error rates of the CD-Kennedy and homodyne receivers with equal-gain combining."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channel import TurbulenceParams, fw_equiv_homodyne, fw_equiv_kennedy
from .errors import DomainError
from .quadrature import DEFAULT_SPEC, QuadSpec, integrate_lognormal, q_function


class Receiver(str, enum.Enum):
    KENNEDY = "kennedy"
    HOMODYNE = "homodyne"


class BerMethod(str, enum.Enum):
    CLOSED_FORM_FW = "closed_form_fw"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class SignalAmplitude:
    """Real BPSK amplitude; bit 0 is sent as -beta, bit 1 as +beta."""

    beta: float

    def __post_init__(self):
        if not (self.beta >= 0.0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be a finite non-negative real, got {self.beta}")

    @classmethod
    def from_photons(cls, beta_sq):
        if beta_sq < 0.0:
            raise DomainError(f"mean photon number must be >= 0, got {beta_sq}")
        return cls(math.sqrt(beta_sq))

    @property
    def beta_sq(self):
        return self.beta * self.beta


@dataclass(frozen=True)
class BerResult:
    ber: float
    method: BerMethod
    mc_stderr: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.ber <= 0.5:
            raise DomainError(f"BER {self.ber} outside [0, 0.5]")


def kennedy_photon_pmf(lam, n):
    """Poisson probability of ``n`` clicks at mean ``lam``, with 0^0 = 1."""
    if lam < 0.0:
        raise DomainError(f"Poisson mean must be >= 0, got {lam}")
    if n < 0:
        return 0.0
    if lam == 0.0:
        return 1.0 if n == 0 else 0.0
    if lam > 700.0 or n > 170:
        return math.exp(n * math.log(lam) - lam - math.lgamma(n + 1))
    return math.exp(-lam) * lam**n / math.factorial(n)


def kennedy_conditional_ber(beta: SignalAmplitude, n_branches, eta_sum):
    """Error probability given the channel; only a dark outcome under bit 1 is wrong."""
    r = 0.5 * np.exp(-4.0 * beta.beta_sq / n_branches * np.asarray(eta_sum, dtype=float))
    return float(r) if r.ndim == 0 else r


def kennedy_ber(beta: SignalAmplitude, params: TurbulenceParams, spec: QuadSpec = DEFAULT_SPEC) -> BerResult:
    dist = fw_equiv_kennedy(params)
    n = params.n_branches
    ber = integrate_lognormal(lambda t: kennedy_conditional_ber(beta, n, t), dist, spec)
    return BerResult(min(max(ber, 0.0), 0.5), BerMethod.CLOSED_FORM_FW)


def homodyne_conditional_pdf(beta_signed, n_branches, eta_sqrt_sum, x):
    """Density of the combined quadrature: mean beta_l * S / sqrt(N), variance N / 4."""
    n = n_branches
    mean = beta_signed / math.sqrt(n) * eta_sqrt_sum
    r = math.sqrt(2.0 / (n * math.pi)) * np.exp(-2.0 / n * (np.asarray(x, dtype=float) - mean) ** 2)
    return float(r) if r.ndim == 0 else r


def homodyne_conditional_ber(beta: SignalAmplitude, n_branches, eta_sqrt_sum):
    return q_function(2.0 * beta.beta / n_branches * np.asarray(eta_sqrt_sum, dtype=float))


def homodyne_ber(beta: SignalAmplitude, params: TurbulenceParams, spec: QuadSpec = DEFAULT_SPEC) -> BerResult:
    dist = fw_equiv_homodyne(params)
    n = params.n_branches
    ber = integrate_lognormal(lambda t: homodyne_conditional_ber(beta, n, t), dist, spec)
    return BerResult(min(max(ber, 0.0), 0.5), BerMethod.CLOSED_FORM_FW)


def ber(receiver, beta: SignalAmplitude, params: TurbulenceParams, spec: QuadSpec = DEFAULT_SPEC) -> BerResult:
    if Receiver(receiver) is Receiver.KENNEDY:
        return kennedy_ber(beta, params, spec)
    return homodyne_ber(beta, params, spec)
