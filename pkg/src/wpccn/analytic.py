r"""Closed-form outage probability and delay-limited throughput.

Every HTC expression is built from three normalised thresholds

* ``a = 4 nu / (mu s2_as s2_sa)`` for the direct source-AP path,
* ``b = 4 nu / (mu s2_as s2_sr)`` for the source-relay hop,
* ``c = 4 nu / (mu s2_ar s2_ra)`` for the relay-AP hop,

each fed to :func:`~wpccn.special.s_func` (approximate forms) or to
``1 + w_func`` (high-SNR forms). Results are clamped to ``[0, 1]``.
"""

import enum
import math
from dataclasses import dataclass, replace

from . import special
from .errors import DomainError, SchemeMismatchError

__all__ = [
    "Scheme",
    "SystemParams",
    "MAX_RELAYS",
    "check_scheme",
    "snr_scale_mu",
    "snr_threshold_nu",
    "outage_htt",
    "outage_htc_single",
    "outage_or",
    "outage_prs1",
    "outage_prs2",
    "outage_approximate",
    "outage_asymptotic",
    "throughput",
]

# Alternating binomial sums lose precision quickly beyond this.
MAX_RELAYS = 64


class Scheme(str, enum.Enum):
    HTT = "htt"
    HTC_SINGLE = "htc-single"
    HTC_OR = "or"
    HTC_PRS1 = "prs1"
    HTC_PRS2 = "prs2"

    @classmethod
    def parse(cls, text):
        key = str(text).strip().lower().replace("_", "-")
        aliases = {
            "htc": cls.HTC_SINGLE,
            "single": cls.HTC_SINGLE,
            "htc-or": cls.HTC_OR,
            "prs-i": cls.HTC_PRS1,
            "htc-prs1": cls.HTC_PRS1,
            "prs-ii": cls.HTC_PRS2,
            "htc-prs2": cls.HTC_PRS2,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown scheme {text!r}") from None

    @property
    def selects_relay(self):
        return self in (Scheme.HTC_OR, Scheme.HTC_PRS1, Scheme.HTC_PRS2)


@dataclass(frozen=True)
class SystemParams:
    """Protocol scalars. Powers in dBm, rate in bits per channel use.

    The block time is normalised to one; `tau` is the energy-transfer
    fraction of each block.
    """

    pa_dbm: float = 35.0
    n0_dbm: float = -80.0
    eta: float = 0.5
    tau: float = 1.0 / 3.0
    rate: float = 1.0
    n_relays: int = 1

    def __post_init__(self):
        if not (0.0 < self.eta < 1.0):
            raise DomainError(f"eta must lie in (0, 1), got {self.eta}")
        if not (0.0 < self.tau < 1.0):
            raise DomainError(f"tau must lie in (0, 1), got {self.tau}")
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise DomainError(f"rate must be > 0, got {self.rate}")
        if not (math.isfinite(self.pa_dbm) and math.isfinite(self.n0_dbm)):
            raise DomainError("pa_dbm and n0_dbm must be finite")
        if int(self.n_relays) != self.n_relays or not (0 <= self.n_relays <= MAX_RELAYS):
            raise DomainError(f"n_relays must be an integer in [0, {MAX_RELAYS}]")

    @property
    def rho(self):
        """Linear AP-power-to-noise ratio ``P_A / N_0``."""
        return 10.0 ** ((self.pa_dbm - self.n0_dbm) / 10.0)

    def with_(self, **changes):
        return replace(self, **changes)


def check_scheme(scheme, n_relays):
    """Raise :class:`SchemeMismatchError` if `scheme` cannot run with `n_relays`."""
    scheme = Scheme(scheme)
    if scheme is Scheme.HTC_SINGLE and n_relays != 1:
        raise SchemeMismatchError(f"{scheme.value} needs exactly one relay, got {n_relays}")
    if scheme.selects_relay and n_relays < 1:
        raise SchemeMismatchError(f"{scheme.value} needs at least one relay")
    return scheme


def snr_scale_mu(params, half_duplex_factor=2):
    """SNR scale ``factor * eta * rho * tau / (1 - tau)``.

    `half_duplex_factor` is 2 for HTC (the harvested energy is spent in half
    of the uplink) and 1 for HTT.
    """
    if 1.0 - params.tau < 1e-12:
        raise OverflowError(f"tau={params.tau} too close to 1; mu overflows")
    return half_duplex_factor * params.eta * params.rho * params.tau / (1.0 - params.tau)


def snr_threshold_nu(rate, half_duplex_factor=2):
    """Outage SNR threshold ``2**(factor * rate) - 1``."""
    if not rate > 0:
        raise DomainError(f"rate must be > 0, got {rate}")
    if half_duplex_factor not in (1, 2):
        raise DomainError("half_duplex_factor must be 1 or 2")
    return 2.0 ** (half_duplex_factor * rate) - 1.0


def _clamp(p):
    return min(1.0, max(0.0, p))


def _threshold(nu, mu, s1, s2):
    den = mu * s1 * s2
    if den == 0.0:
        return math.inf
    return 4.0 * nu / den


def _s(x):
    # Tail of the product law; an infinite threshold is never exceeded.
    return 0.0 if math.isinf(x) else special.s_func(x)


def _thresholds(params, stats):
    mu = snr_scale_mu(params)
    nu = snr_threshold_nu(params.rate)
    a = _threshold(nu, mu, stats.sigma2_as, stats.sigma2_sa)
    b = _threshold(nu, mu, stats.sigma2_as, stats.sigma2_sr)
    c = _threshold(nu, mu, stats.sigma2_ar, stats.sigma2_ra)
    return a, b, c


def _require_relays(params, exact=None):
    n = params.n_relays
    if exact is not None and n != exact:
        raise SchemeMismatchError(f"expected n_relays={exact}, got {n}")
    if n < 1:
        raise SchemeMismatchError("relay schemes need n_relays >= 1")
    return n


def outage_htt(params, stats):
    """Outage of harvest-then-transmit: ``1 - S(4 nu' / (mu' s2_as s2_sa))``.

    HTT uses the whole uplink for one transmission, hence ``nu' = 2**R - 1``
    and ``mu' = eta * rho * tau / (1 - tau)``. This form is exact.
    """
    mu = snr_scale_mu(params, half_duplex_factor=1)
    nu = snr_threshold_nu(params.rate, half_duplex_factor=1)
    return _clamp(1.0 - _s(_threshold(nu, mu, stats.sigma2_as, stats.sigma2_sa)))


def outage_htc_single(params, stats):
    """Approximate HTC outage in the three-node model (one relay)."""
    _require_relays(params, exact=1)
    a, b, c = _thresholds(params, stats)
    return _clamp(1.0 - _s(a) - _s(c) * (_s(b) - _s(b + a)))


def outage_or(params, stats):
    """Approximate HTC outage with opportunistic (max-min) relay selection."""
    n_relays = _require_relays(params)
    a, b, c = _thresholds(params, stats)
    s_c = _s(c)
    total = 1.0 - _s(a)
    for n in range(1, n_relays + 1):
        total += (
            math.comb(n_relays, n)
            * (-1.0) ** n
            * s_c**n
            * (_s(n * b) - _s(n * b + a))
        )
    return _clamp(total)


def outage_prs1(params, stats):
    """Approximate HTC outage with partial relay selection on the first hop."""
    n_relays = _require_relays(params)
    a, b, c = _thresholds(params, stats)
    acc = 0.0
    for n in range(n_relays):
        k = n + 1
        acc += (
            math.comb(n_relays - 1, n)
            * (-1.0) ** n
            / k
            * (_s(k * b) - _s(k * b + a))
        )
    return _clamp(1.0 - _s(a) - _s(c) * n_relays * acc)


def outage_prs2(params, stats):
    """Approximate HTC outage with partial relay selection on the second hop."""
    n_relays = _require_relays(params)
    a, b, c = _thresholds(params, stats)
    s_c = _s(c)
    best_second_hop = sum(
        math.comb(n_relays, n) * (-1.0) ** (n + 1) * s_c**n
        for n in range(1, n_relays + 1)
    )
    return _clamp(1.0 - _s(a) - best_second_hop * (_s(b) - _s(b + a)))


def outage_asymptotic(scheme, params, stats):
    """High-SNR outage, obtained by replacing ``S(x)`` with ``1 + W(x)``.

    At low SNR the raw expression leaves ``[0, 1]`` and is clamped. When no
    energy is harvested at all (``mu == 0``) the outage is 1.
    """
    scheme = check_scheme(scheme, params.n_relays)
    if scheme is Scheme.HTT:
        raise SchemeMismatchError("no asymptotic form is defined for HTT")
    n_relays = params.n_relays
    a, b, c = _thresholds(params, stats)
    if not all(math.isfinite(x) for x in (a, b, c)):
        return 1.0
    w = special.w_func
    one_w_c = 1.0 + w(c)
    head = -w(a)
    if scheme in (Scheme.HTC_OR, Scheme.HTC_SINGLE):
        total = head
        for n in range(1, n_relays + 1):
            total += (
                math.comb(n_relays, n)
                * (-1.0) ** n
                * one_w_c**n
                * (w(n * b) - w(n * b + a))
            )
        return _clamp(total)
    if scheme is Scheme.HTC_PRS1:
        acc = 0.0
        for n in range(n_relays):
            k = n + 1
            acc += math.comb(n_relays - 1, n) * (-1.0) ** n / k * (w(k * b) - w(k * b + a))
        return _clamp(head - one_w_c * n_relays * acc)
    best_second_hop = sum(
        math.comb(n_relays, n) * (-1.0) ** (n + 1) * one_w_c**n
        for n in range(1, n_relays + 1)
    )
    return _clamp(head - best_second_hop * (w(b) - w(b + a)))


_APPROXIMATE = {
    Scheme.HTT: outage_htt,
    Scheme.HTC_SINGLE: outage_htc_single,
    Scheme.HTC_OR: outage_or,
    Scheme.HTC_PRS1: outage_prs1,
    Scheme.HTC_PRS2: outage_prs2,
}


def outage_approximate(scheme, params, stats):
    """Dispatch to the closed-form outage of `scheme`."""
    scheme = check_scheme(scheme, params.n_relays)
    return _APPROXIMATE[scheme](params, stats)


def throughput(scheme, params, stats, asymptotic=False):
    """Delay-limited throughput ``rate * (1 - P_out) * (1 - tau)`` in bpcu.

    Parameters
    ----------
    scheme : Scheme or str
    params : SystemParams
    stats : ChannelStats
    asymptotic : bool
        Use the high-SNR outage form instead of the approximate one.
    """
    if asymptotic:
        p_out = outage_asymptotic(scheme, params, stats)
    else:
        p_out = outage_approximate(scheme, params, stats)
    return params.rate * (1.0 - p_out) * (1.0 - params.tau)
