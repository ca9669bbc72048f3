import math

import numpy as np
from numba import njit

from .numpy_impl import INVERSION_CAP, LN2

JIT = dict(cache=True, nogil=True)


@njit(**JIT)
def _logistic_entropy(z):
    az = abs(z)
    return (az / (1.0 + math.exp(az)) + math.log1p(math.exp(-az))) / LN2


@njit(**JIT)
def branch_transmittances(z, mu0, sigma0, a, c):
    m, n = z.shape
    out = np.empty((m, n))
    for i in range(m):
        common = 0.0
        for j in range(n):
            common += z[i, j]
        for j in range(n):
            out[i, j] = math.exp(mu0 + sigma0 * (a * z[i, j] + c * common))
    return out


@njit(**JIT)
def branch_sums(z, mu0, sigma0, a, c):
    m, n = z.shape
    eta_sum = np.empty(m)
    eta_sqrt_sum = np.empty(m)
    for i in range(m):
        common = 0.0
        for j in range(n):
            common += z[i, j]
        s = 0.0
        r = 0.0
        for j in range(n):
            e = math.exp(mu0 + sigma0 * (a * z[i, j] + c * common))
            s += e
            r += math.sqrt(e)
        eta_sum[i] = s
        eta_sqrt_sum[i] = r
    return eta_sum, eta_sqrt_sum


@njit(**JIT)
def poisson_inversion(lam, u, cutoff):
    n = np.empty(lam.shape[0], dtype=np.int64)
    for i in range(lam.shape[0]):
        if lam[i] >= cutoff:
            n[i] = -1
            continue
        p = math.exp(-lam[i])
        cdf = p
        k = 0
        while u[i] > cdf and k < INVERSION_CAP:
            k += 1
            p *= lam[i] / k
            cdf += p
        n[i] = k
    return n


@njit(**JIT)
def kennedy_counts(eta_sum, bit, u, rate, cutoff):
    return poisson_inversion(rate * eta_sum * bit, u, cutoff)


@njit(**JIT)
def _summarise(errors, gaps):
    # two passes: sum of kept gaps, then squared deviations of the per-trial
    # contributions (zero when discarded) about the chunk mean
    m = gaps.shape[0]
    kept = 0
    gsum = 0.0
    for i in range(m):
        if gaps[i] >= 0.0:
            kept += 1
            gsum += gaps[i]
    mean = gsum / m
    m2 = 0.0
    for i in range(m):
        d = (gaps[i] if gaps[i] >= 0.0 else 0.0) - mean
        m2 += d * d
    return errors, gsum, m2, kept


@njit(**JIT)
def kennedy_score(eta_sum, n, bit, rate, i_ae):
    errors = 0
    gaps = np.empty(eta_sum.shape[0])
    for i in range(eta_sum.shape[0]):
        decided = 1 if n[i] > 0 else 0
        if decided != bit[i]:
            errors += 1
        if n[i] >= 1:
            gap = 1.0 - i_ae
        else:
            gap = 1.0 - _logistic_entropy(rate * eta_sum[i]) - i_ae
        gaps[i] = gap
    return _summarise(errors, gaps)


@njit(**JIT)
def homodyne_score(eta_hd, bit, zx, offset, sd, llr_scale, i_ae):
    errors = 0
    gaps = np.empty(eta_hd.shape[0])
    for i in range(eta_hd.shape[0]):
        mean = offset * eta_hd[i] if bit[i] == 1 else -offset * eta_hd[i]
        x = mean + sd * zx[i]
        decided = 1 if x > 0.0 else 0
        if decided != bit[i]:
            errors += 1
        gaps[i] = 1.0 - _logistic_entropy(llr_scale * x * eta_hd[i]) - i_ae
    return _summarise(errors, gaps)
