r"""Scalar special-function kernels used by the outage formulas.

Only what the closed forms need is provided: the modified Bessel function
:math:`K_1`, the tail function :math:`S(x) = \sqrt{x} K_1(\sqrt{x})`, its
small-argument surrogate :math:`W(x) = (x/2)\ln(\sqrt{x}/2)`, and the tail
probability of a product of two independent exponential variables.
"""

import math

from .errors import DomainError

__all__ = ["bessel_k1", "s_func", "w_func", "product_exceed_prob"]

_EULER_GAMMA = 0.57721566490153286061
_SERIES_MAX_X = 2.0
_EPS = 1e-17
_MAX_ITER = 10_000


def _check_positive(x, name="x"):
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} must be finite and > 0, got {x!r}")
    return x


def _k1_series(x):
    # Ascending series with the logarithmic term, valid for all x > 0 but
    # only used for x <= 2 where cancellation against I1 stays harmless.
    q = 0.25 * x * x
    log_half = math.log(0.5 * x)
    term = 1.0  # (x^2/4)^k / (k! (k+1)!)
    harmonic_k = 0.0  # H_k
    harmonic_k1 = 1.0  # H_{k+1}
    i1_sum = 0.0
    psi_sum = 0.0
    for k in range(_MAX_ITER):
        i1_sum += term
        # psi(k+1) + psi(k+2) = H_k + H_{k+1} - 2*gamma
        contrib = term * (harmonic_k + harmonic_k1 - 2.0 * _EULER_GAMMA)
        psi_sum += contrib
        if term < _EPS * i1_sum and abs(contrib) <= _EPS * abs(psi_sum):
            break
        term *= q / ((k + 1) * (k + 2))
        harmonic_k = harmonic_k1
        harmonic_k1 += 1.0 / (k + 2)
    half_x = 0.5 * x
    i1 = half_x * i1_sum
    return 1.0 / x + log_half * i1 - 0.5 * half_x * psi_sum


# Past this, K_1(x) < exp(-x) is below the smallest subnormal double.
_UNDERFLOW_X = 746.0


def _k1_continued_fraction(x):
    # Steed's CF2 with Temme's normalisation for K_0, then K_1 from the
    # ratio; converges for x >= 2 in O(1/x) iterations.
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAX_ITER):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    h *= a1
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    return k0 * (x + 0.5 - h) / x


def bessel_k1(x):
    """Modified Bessel function of the second kind, order one.

    Parameters
    ----------
    x : float
        Argument, finite and strictly positive.

    Returns
    -------
    float
        ``K_1(x)``; ``0.0`` once ``exp(-x)`` underflows.

    Raises
    ------
    DomainError
        If `x` is not finite or not strictly positive.
    """
    x = _check_positive(x)
    if x <= _SERIES_MAX_X:
        return _k1_series(x)
    if x > _UNDERFLOW_X:
        return 0.0
    return _k1_continued_fraction(x)


def s_func(x):
    """Return ``sqrt(x) * K_1(sqrt(x))`` with ``s_func(0) == 1``.

    This is ``Pr(X*Y > x/4)`` for independent unit-mean exponentials, so it
    decreases strictly from 1 towards 0.
    """
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"x must be finite and >= 0, got {x!r}")
    if x == 0.0:
        return 1.0
    r = math.sqrt(x)
    return r * bessel_k1(r)


def w_func(x):
    """Small-argument surrogate ``(x/2) * ln(sqrt(x)/2)`` of ``S(x) - 1``."""
    x = _check_positive(x)
    return 0.5 * x * (0.5 * math.log(x) - math.log(2.0))


def product_exceed_prob(z, lambda1, lambda2):
    """Probability that ``X*Y > z`` for independent exponentials.

    Parameters
    ----------
    z : float
        Threshold, ``z >= 0``.
    lambda1, lambda2 : float
        Means of the two exponential variables.

    Returns
    -------
    float
        ``S(4 z / (lambda1 * lambda2))``, which is 1 at ``z = 0``.
    """
    lambda1 = _check_positive(lambda1, "lambda1")
    lambda2 = _check_positive(lambda2, "lambda2")
    z = float(z)
    if not math.isfinite(z) or z < 0.0:
        raise DomainError(f"z must be finite and >= 0, got {z!r}")
    return s_func(4.0 * z / (lambda1 * lambda2))
