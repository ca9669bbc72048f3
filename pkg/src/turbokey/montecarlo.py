"""End-to-end Monte Carlo over the full N-branch channel.

Trials are split into fixed-size chunks. Chunk ``k`` of stream ``s`` under
seed ``seed`` draws from ``PCG64(SeedSequence(seed, spawn_key=(s, k)))``, so
a result depends only on ``(seed, stream_id, trials, chunk_size)`` and not
on how many workers process the chunks. Within a chunk the draws are taken
in a fixed order: branch normals, bit uniforms, then outcome variates.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import kernels
from .channel import TurbulenceParams, equicorrelated_sqrt
from .detection import Receiver, SignalAmplitude
from .errors import DomainError
from .qkd import AttackModel, i_ae_for

DEFAULT_CHUNK = 1 << 16
POISSON_INVERSION_CUTOFF = 30.0


@dataclass(frozen=True)
class McConfig:
    trials: int
    seed: int = 0
    stream_id: int = 0
    chunk_size: int = DEFAULT_CHUNK
    workers: int = 1
    backend: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.stream_id < 0:
            raise DomainError("stream_id must be >= 0")
        if self.chunk_size < 1 or self.workers < 1:
            raise DomainError("chunk_size and workers must be >= 1")

    def chunks(self):
        """(index, size) of every chunk."""
        full, rest = divmod(self.trials, self.chunk_size)
        sizes = [self.chunk_size] * full + ([rest] if rest else [])
        return list(enumerate(sizes))

    def rng(self, chunk_index):
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, chunk_index))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    trials: int


def _map_chunks(config, fn):
    chunks = config.chunks()
    if config.workers == 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(fn, chunks))


def _check_channel(params):
    return equicorrelated_sqrt(params.n_branches, params.rho)


def sample_transmittances(params: TurbulenceParams, config: McConfig) -> np.ndarray:
    """Array of shape ``(trials, N)`` of correlated branch transmittances."""
    a, c = _check_channel(params)
    k = kernels.get(config.backend)

    def one(chunk):
        idx, m = chunk
        z = config.rng(idx).standard_normal((m, params.n_branches))
        return k.branch_transmittances(z, params.mu0, params.sigma0, a, c)

    return np.concatenate(_map_chunks(config, one))


def sample_poisson_ptrs(lam, rng):
    """Poisson variates by transformed rejection with squeeze (Hormann's PTRS).

    Meant for means of about 10 and up.
    """
    lam = np.asarray(lam, dtype=float)
    out = np.empty(lam.shape, dtype=np.int64)
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    todo = np.arange(lam.size)
    while todo.size:
        u = rng.random(todo.size) - 0.5
        v = rng.random(todo.size)
        us = 0.5 - np.abs(u)
        kk = np.floor((2.0 * a[todo] / us + b[todo]) * u + lam[todo] + 0.43)
        quick = (us >= 0.07) & (v <= v_r[todo])
        reject = (kk < 0) | ((us < 0.013) & (v > us))
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = np.log(v) + np.log(inv_alpha[todo]) - np.log(a[todo] / (us * us) + b[todo])
            rhs = -lam[todo] + kk * loglam[todo] - special.gammaln(kk + 1.0)
        accept = quick | (~reject & (lhs <= rhs))
        out[todo[accept]] = kk[accept].astype(np.int64)
        todo = todo[~accept]
    return out


def sample_poisson(lam, rng, backend=None):
    """Poisson variates: inversion below mean 30, PTRS above.

    Inversion consumes one uniform per variate, drawn up front; PTRS draws
    from ``rng`` afterwards for the large-mean entries only.
    """
    lam = np.ascontiguousarray(lam, dtype=float)
    if np.any(lam < 0.0):
        raise DomainError("Poisson mean must be >= 0")
    u = rng.random(lam.shape[0])
    n = kernels.get(backend).poisson_inversion(lam, u, POISSON_INVERSION_CUTOFF)
    big = n < 0
    if big.any():
        n[big] = sample_poisson_ptrs(lam[big], rng)
    return n


def _simulate(receiver, beta, params, config, i_ae):
    """Per-chunk (size, errors, gap_sum, gap_m2, kept) tuples, in chunk order.

    ``gap_m2`` is the sum of squared deviations of the per-trial key
    contributions about the chunk mean.
    """
    receiver = Receiver(receiver)
    a, c = _check_channel(params)
    k = kernels.get(config.backend)
    n = params.n_branches
    rate = 4.0 * beta.beta_sq / n
    offset = beta.beta / math.sqrt(n)
    sd = 0.5 * math.sqrt(n)
    llr_scale = 8.0 * beta.beta / n**1.5

    def one(chunk):
        idx, m = chunk
        rng = config.rng(idx)
        z = rng.standard_normal((m, n))
        bit = (rng.random(m) >= 0.5).astype(np.int8)
        eta_sum, eta_hd = k.branch_sums(z, params.mu0, params.sigma0, a, c)
        if receiver is Receiver.KENNEDY:
            u = rng.random(m)
            counts = k.kennedy_counts(eta_sum, bit, u, rate, POISSON_INVERSION_CUTOFF)
            big = counts < 0
            if big.any():
                counts[big] = sample_poisson_ptrs(rate * eta_sum[big], rng)
            return (m,) + tuple(k.kennedy_score(eta_sum, counts, bit, rate, i_ae))
        zx = rng.standard_normal(m)
        return (m,) + tuple(k.homodyne_score(eta_hd, bit, zx, offset, sd, llr_scale, i_ae))

    return _map_chunks(config, one)


def mc_ber(receiver, beta: SignalAmplitude, params: TurbulenceParams, config: McConfig) -> McEstimate:
    """Error fraction of the threshold decision, with binomial standard error."""
    parts = _simulate(receiver, beta, params, config, 0.0)
    errors = sum(p[1] for p in parts)
    p = errors / config.trials
    return McEstimate(p, math.sqrt(p * (1.0 - p) / config.trials), config.trials)


def mc_skr(receiver, beta: SignalAmplitude, params: TurbulenceParams, attack: AttackModel, config: McConfig) -> McEstimate:
    """Mean of (I_AB - I_AE) over kept outcomes, zero for discarded ones.

    The equivalent transmittances come from the sampled branches, not from
    any log-normal surrogate.
    """
    info = i_ae_for(beta, params, attack)
    parts = _simulate(receiver, beta, params, config, info)
    n = config.trials
    mean = math.fsum(p[2] for p in parts) / n
    # merge chunk variances (Chan et al.): within-chunk M2 plus between-chunk spread
    m2 = math.fsum(p[3] + p[0] * (p[2] / p[0] - mean) ** 2 for p in parts)
    var = m2 / max(n - 1, 1)
    return McEstimate(mean, math.sqrt(var / n), n)


def mc_kept_fraction(receiver, beta, params, attack, config) -> McEstimate:
    info = i_ae_for(beta, params, attack)
    parts = _simulate(receiver, beta, params, config, info)
    p = sum(x[4] for x in parts) / config.trials
    return McEstimate(p, math.sqrt(p * (1.0 - p) / config.trials), config.trials)
