import math

import numpy as np

LN2 = math.log(2.0)
# Inversion stops here; u can exceed the rounded CDF by an ulp.
INVERSION_CAP = 400


def _logistic_entropy(z):
    az = np.abs(z)
    return (az / (1.0 + np.exp(az)) + np.log1p(np.exp(-az))) / LN2


def log_transmittances(z, mu0, sigma0, a, c):
    return mu0 + sigma0 * (a * z + c * z.sum(axis=1, keepdims=True))


def branch_transmittances(z, mu0, sigma0, a, c):
    return np.exp(log_transmittances(z, mu0, sigma0, a, c))


def branch_sums(z, mu0, sigma0, a, c):
    eta = branch_transmittances(z, mu0, sigma0, a, c)
    return eta.sum(axis=1), np.sqrt(eta).sum(axis=1)


def poisson_inversion(lam, u, cutoff):
    """Sequential-search inversion; entries with lam >= cutoff come back as -1."""
    n = np.zeros(lam.shape, dtype=np.int64)
    small = lam < cutoff
    p = np.exp(-np.where(small, lam, 0.0))
    cdf = p.copy()
    active = small & (u > cdf)
    k = 0
    while active.any() and k < INVERSION_CAP:
        k += 1
        idx = np.flatnonzero(active)
        p[idx] *= lam[idx] / k
        cdf[idx] += p[idx]
        n[idx] = k
        active[idx] = u[idx] > cdf[idx]
    n[~small] = -1
    return n


def kennedy_counts(eta_sum, bit, u, rate, cutoff):
    return poisson_inversion(rate * eta_sum * bit, u, cutoff)


def _score(errors, gap):
    keep = gap >= 0.0
    g = np.where(keep, gap, 0.0)
    gsum = float(g[keep].sum())
    d = g - gsum / g.size
    return int(errors), gsum, float(np.dot(d, d)), int(keep.sum())


def kennedy_score(eta_sum, n, bit, rate, i_ae):
    errors = np.count_nonzero((n > 0) != (bit == 1))
    i_ab = np.where(n >= 1, 1.0, 1.0 - _logistic_entropy(rate * eta_sum))
    return _score(errors, i_ab - i_ae)


def homodyne_score(eta_hd, bit, zx, offset, sd, llr_scale, i_ae):
    x = np.where(bit == 1, offset, -offset) * eta_hd + sd * zx
    errors = np.count_nonzero((x > 0.0) != (bit == 1))
    i_ab = 1.0 - _logistic_entropy(llr_scale * x * eta_hd)
    return _score(errors, i_ab - i_ae)
