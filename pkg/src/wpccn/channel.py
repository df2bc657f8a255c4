"""Node geometry, mean channel gains and Rayleigh block-fading sampling.

Channel power gains are exponential with the link-class mean. Samples come
from the inverse CDF ``-sigma2 * ln(1 - U)`` so a given uniform stream maps
to the same gains on every platform.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Topology",
    "ChannelStats",
    "ChannelRealization",
    "ChannelBatch",
    "variances_from_topology",
    "sample_block",
    "sample_blocks",
    "best_first_hop_pdf_check",
]

# 30 dB attenuation at the 1 m reference distance.
REFERENCE_GAIN = 1e-3


@dataclass(frozen=True)
class Topology:
    """Linear topology: relays sit on the segment between source and AP."""

    d_as: float = 10.0
    d_sr: float = 3.0
    chi: float = 2.0

    def __post_init__(self):
        if not (np.isfinite(self.d_as) and self.d_as > 0):
            raise DomainError(f"d_as must be > 0, got {self.d_as}")
        if not (0 < self.d_sr < self.d_as):
            raise DomainError(f"d_sr must lie in (0, d_as={self.d_as}), got {self.d_sr}")
        if not (2.0 <= self.chi <= 5.0):
            raise DomainError(f"chi must lie in [2, 5], got {self.chi}")

    @property
    def d_ar(self):
        return self.d_as - self.d_sr


@dataclass(frozen=True)
class ChannelStats:
    """Mean channel power gains per link class (linear scale).

    All N relays share one value per link class.
    """

    sigma2_as: float
    sigma2_sa: float
    sigma2_ar: float
    sigma2_ra: float
    sigma2_sr: float

    def __post_init__(self):
        for name in ("sigma2_as", "sigma2_sa", "sigma2_ar", "sigma2_ra", "sigma2_sr"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and > 0, got {v}")

    @property
    def sigma2_rs(self):
        return self.sigma2_sr


@dataclass(frozen=True)
class ChannelRealization:
    """Gains of one block. Relay vectors have one entry per relay."""

    h_as: float
    h_sa: float
    h_ar: np.ndarray
    h_ra: np.ndarray
    h_sr: np.ndarray

    @property
    def n_relays(self):
        return len(self.h_sr)


@dataclass(frozen=True)
class ChannelBatch:
    """Gains of many blocks: shapes ``(n,)`` for direct links, ``(n, N)`` for relays."""

    h_as: np.ndarray
    h_sa: np.ndarray
    h_ar: np.ndarray
    h_ra: np.ndarray
    h_sr: np.ndarray

    @property
    def n_blocks(self):
        return self.h_as.shape[0]

    @property
    def n_relays(self):
        return self.h_sr.shape[1]

    def block(self, i):
        return ChannelRealization(
            h_as=float(self.h_as[i]),
            h_sa=float(self.h_sa[i]),
            h_ar=self.h_ar[i].copy(),
            h_ra=self.h_ra[i].copy(),
            h_sr=self.h_sr[i].copy(),
        )


def variances_from_topology(topo):
    """Mean gains ``1e-3 * d**(-chi)`` for each link of a linear topology."""
    g_as = REFERENCE_GAIN * topo.d_as ** (-topo.chi)
    g_sr = REFERENCE_GAIN * topo.d_sr ** (-topo.chi)
    g_ar = REFERENCE_GAIN * topo.d_ar ** (-topo.chi)
    return ChannelStats(
        sigma2_as=g_as, sigma2_sa=g_as, sigma2_ar=g_ar, sigma2_ra=g_ar, sigma2_sr=g_sr
    )


def _exponential(rng, mean, size):
    u = rng.random(size)
    return -mean * np.log1p(-u)


def sample_blocks(stats, n_relays, n_blocks, rng):
    """Draw `n_blocks` independent block realizations.

    The draw order (h_as, h_sa, h_ar, h_ra, h_sr) is part of the
    reproducibility contract; do not reorder.
    """
    if n_relays < 0:
        raise DomainError(f"n_relays must be >= 0, got {n_relays}")
    shape = (n_blocks, n_relays)
    return ChannelBatch(
        h_as=_exponential(rng, stats.sigma2_as, n_blocks),
        h_sa=_exponential(rng, stats.sigma2_sa, n_blocks),
        h_ar=_exponential(rng, stats.sigma2_ar, shape),
        h_ra=_exponential(rng, stats.sigma2_ra, shape),
        h_sr=_exponential(rng, stats.sigma2_sr, shape),
    )


def sample_block(stats, n_relays, rng):
    """Draw a single block realization from `rng` (a ``numpy.random.Generator``)."""
    return sample_blocks(stats, n_relays, 1, rng).block(0)


def best_first_hop_pdf_check(stats, n_relays, samples, seed=0):
    """Kolmogorov-Smirnov distance for the best source-relay gain.

    Compares the empirical CDF of ``max_i h_sr[i]`` over `samples` blocks
    against ``(1 - exp(-z / sigma2_sr)) ** N`` and returns the two-sided
    statistic ``sup |F_emp - F|``.
    """
    if n_relays < 1:
        raise DomainError("n_relays must be >= 1")
    if samples < 10_000:
        raise DomainError("samples must be >= 1e4")
    batch = sample_blocks(stats, n_relays, samples, np.random.default_rng(seed))
    z = np.sort(batch.h_sr.max(axis=1))
    cdf = (-np.expm1(-z / stats.sigma2_sr)) ** n_relays
    n = len(z)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))
