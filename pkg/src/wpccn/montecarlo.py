"""Block-level Monte Carlo simulation of HTT and HTC with relay selection.

Blocks are evaluated with the exact amplify-and-forward SNR, so these
estimates are the reference the closed forms are checked against.

Reproducibility: the block index range is cut into fixed chunks of
``CHUNK_BLOCKS``; chunk ``k`` draws from a Philox stream keyed by
``(seed, k)``. Chunk results are reduced in chunk order, which makes every
estimate independent of the number of workers.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import Scheme, check_scheme, snr_scale_mu, snr_threshold_nu
from .channel import ChannelBatch, sample_blocks
from .errors import SchemeMismatchError

__all__ = [
    "CHUNK_BLOCKS",
    "Z_95",
    "BlockOutcome",
    "OutageEstimate",
    "ThroughputEstimate",
    "GapStats",
    "block_snrs",
    "evaluate_block",
    "estimate_outage",
    "estimate_throughput",
    "approximation_gap",
    "chunk_rng",
]

CHUNK_BLOCKS = 1 << 16
Z_95 = 1.96


@dataclass(frozen=True)
class BlockOutcome:
    gamma_sa: float
    gamma_sra: float
    gamma_out: float
    outage: bool
    selected_relay: int | None  # zero-based


@dataclass(frozen=True)
class OutageEstimate:
    """Outage frequency over `trials` blocks with a 95% normal-approximation CI.

    `relay_banked_energy` is the mean energy per block (in units of
    ``N_0 * T``) harvested by relays that were not selected and therefore
    kept it; it is reported only and never spent.
    """

    p_hat: float
    trials: int
    ci_halfwidth: float
    seed: int
    outages: int = 0
    relay_banked_energy: float = 0.0

    @property
    def sigma(self):
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)


@dataclass(frozen=True)
class ThroughputEstimate:
    value: float
    ci_halfwidth: float
    outage: OutageEstimate


@dataclass(frozen=True)
class GapStats:
    """Per-block comparison of the exact relayed SNR against its min bound."""

    mean_gap: float
    max_gap: float
    min_gap: float
    disagreement_fraction: float
    trials: int


def chunk_rng(seed, chunk_index):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(chunk_index),))
    return np.random.Generator(np.random.Philox(ss))


def _chunks(trials):
    n_chunks = -(-trials // CHUNK_BLOCKS)
    for k in range(n_chunks):
        start = k * CHUNK_BLOCKS
        yield k, min(CHUNK_BLOCKS, trials - start)


def _map_chunks(fn, trials, workers):
    items = list(_chunks(trials))
    if workers is None or workers <= 1 or len(items) == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def block_snrs(batch, params, scheme):
    """Vectorised per-block SNRs, relay choice and outage decision.

    Returns
    -------
    dict
        Arrays ``gamma_sa``, ``gamma_sra``, ``gamma_out``, ``outage``,
        ``selected`` (``-1`` when no relay is used), and the hop SNRs of the
        selected relay ``hop1``/``hop2`` (zeros when none).
    """
    scheme = check_scheme(scheme, params.n_relays)
    if batch.n_relays != params.n_relays:
        raise SchemeMismatchError(
            f"realization has {batch.n_relays} relays, params expect {params.n_relays}"
        )
    n = batch.n_blocks
    zeros = np.zeros(n)
    if scheme is Scheme.HTT:
        mu = snr_scale_mu(params, half_duplex_factor=1)
        nu = snr_threshold_nu(params.rate, half_duplex_factor=1)
        gamma_sa = mu * batch.h_as * batch.h_sa
        return {
            "gamma_sa": gamma_sa,
            "gamma_sra": zeros,
            "gamma_out": gamma_sa,
            "outage": gamma_sa < nu,
            "selected": np.full(n, -1),
            "hop1": zeros,
            "hop2": zeros,
        }

    mu = snr_scale_mu(params)
    nu = snr_threshold_nu(params.rate)
    gamma_sa = mu * batch.h_as * batch.h_sa
    hop1 = mu * batch.h_as[:, None] * batch.h_sr
    hop2 = mu * batch.h_ar * batch.h_ra
    if scheme is Scheme.HTC_OR:
        selected = np.argmax(np.minimum(hop1, hop2), axis=1)
    elif scheme is Scheme.HTC_PRS1:
        selected = np.argmax(hop1, axis=1)
    elif scheme is Scheme.HTC_PRS2:
        selected = np.argmax(hop2, axis=1)
    else:
        selected = np.zeros(n, dtype=np.intp)
    rows = np.arange(n)
    g1 = hop1[rows, selected]
    g2 = hop2[rows, selected]
    gamma_sra = g1 * g2 / (g1 + g2 + 1.0)
    gamma_out = np.maximum(gamma_sa, gamma_sra)
    return {
        "gamma_sa": gamma_sa,
        "gamma_sra": gamma_sra,
        "gamma_out": gamma_out,
        "outage": gamma_out < nu,
        "selected": selected,
        "hop1": g1,
        "hop2": g2,
    }


def evaluate_block(realization, params, scheme):
    """Evaluate one block realization under `scheme`."""
    batch = ChannelBatch(
        h_as=np.array([realization.h_as], dtype=float),
        h_sa=np.array([realization.h_sa], dtype=float),
        h_ar=np.asarray(realization.h_ar, dtype=float).reshape(1, -1),
        h_ra=np.asarray(realization.h_ra, dtype=float).reshape(1, -1),
        h_sr=np.asarray(realization.h_sr, dtype=float).reshape(1, -1),
    )
    if not (batch.h_ar.shape == batch.h_ra.shape == batch.h_sr.shape):
        raise SchemeMismatchError("relay gain vectors differ in length")
    out = block_snrs(batch, params, scheme)
    sel = int(out["selected"][0])
    return BlockOutcome(
        gamma_sa=float(out["gamma_sa"][0]),
        gamma_sra=float(out["gamma_sra"][0]),
        gamma_out=float(out["gamma_out"][0]),
        outage=bool(out["outage"][0]),
        selected_relay=None if sel < 0 else sel,
    )


def _banked_energy(batch, params, scheme, selected):
    if not Scheme(scheme).selects_relay:
        return 0.0
    scale = params.eta * params.tau * params.rho
    total = batch.h_ar.sum(axis=1) - batch.h_ar[np.arange(batch.n_blocks), selected]
    return float(scale * total.sum())


def estimate_outage(params, stats, scheme, trials, seed, workers=1):
    """Fraction of simulated blocks in outage.

    The result depends only on ``(params, stats, scheme, trials, seed)``.
    """
    scheme = check_scheme(scheme, params.n_relays)
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def run(item):
        k, size = item
        batch = sample_blocks(stats, params.n_relays, size, chunk_rng(seed, k))
        out = block_snrs(batch, params, scheme)
        return int(np.count_nonzero(out["outage"])), _banked_energy(
            batch, params, scheme, out["selected"]
        )

    results = _map_chunks(run, trials, workers)
    outages = sum(r[0] for r in results)
    banked = 0.0
    for r in results:
        banked += r[1]
    p_hat = outages / trials
    return OutageEstimate(
        p_hat=p_hat,
        trials=trials,
        ci_halfwidth=Z_95 * math.sqrt(p_hat * (1.0 - p_hat) / trials),
        seed=seed,
        outages=outages,
        relay_banked_energy=banked / trials,
    )


def estimate_throughput(params, stats, scheme, trials, seed, workers=1):
    """Throughput ``rate * (1 - p_hat) * (1 - tau)`` with the CI scaled alike."""
    est = estimate_outage(params, stats, scheme, trials, seed, workers=workers)
    scale = params.rate * (1.0 - params.tau)
    return ThroughputEstimate(
        value=scale * (1.0 - est.p_hat),
        ci_halfwidth=scale * est.ci_halfwidth,
        outage=est,
    )


def approximation_gap(params, stats, trials, seed, workers=1):
    """Compare the exact relayed SNR with ``mu * min(h_as h_sr, h_ar h_ra)``.

    Only defined for a single relay. The disagreement fraction counts blocks
    whose HTC outage decision flips when the bound replaces the exact SNR.
    """
    check_scheme(Scheme.HTC_SINGLE, params.n_relays)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    nu = snr_threshold_nu(params.rate)

    def run(item):
        k, size = item
        batch = sample_blocks(stats, params.n_relays, size, chunk_rng(seed, k))
        out = block_snrs(batch, params, Scheme.HTC_SINGLE)
        bound = np.minimum(out["hop1"], out["hop2"])
        gap = bound - out["gamma_sra"]
        approx_outage = np.maximum(out["gamma_sa"], bound) < nu
        flips = int(np.count_nonzero(approx_outage != out["outage"]))
        return float(gap.sum()), float(gap.max()), float(gap.min()), flips

    results = _map_chunks(run, trials, workers)
    gap_sum = 0.0
    for r in results:
        gap_sum += r[0]
    return GapStats(
        mean_gap=gap_sum / trials,
        max_gap=max(r[1] for r in results),
        min_gap=min(r[2] for r in results),
        disagreement_fraction=sum(r[3] for r in results) / trials,
        trials=trials,
    )
