"""Scalar special functions for the normal law, vectorised over numpy arrays.

Every function accepts scalars or arrays and returns the same shape.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special as sc

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
# Below this point phi/Phi is evaluated through the asymptotic Mills series.
MILLS_SWITCH = -8.0
_MILLS_TERMS = 30


def norm_log_pdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - LOG_SQRT_2PI


def norm_pdf(x):
    return np.exp(norm_log_pdf(x))


def norm_cdf(x):
    return sc.ndtr(np.asarray(x, dtype=float))


def norm_log_cdf(x):
    # log_ndtr switches to an erfcx-based evaluation in the lower tail
    return sc.log_ndtr(np.asarray(x, dtype=float))


def _mills_ratio_asymptotic(t):
    """Phi(-t)/phi(t) for large positive t via the alternating asymptotic series."""
    t = np.asarray(t, dtype=float)
    inv_t2 = 1.0 / (t * t)
    term = np.ones_like(t)
    total = np.ones_like(t)
    for k in range(1, _MILLS_TERMS + 1):
        term = -term * (2 * k - 1) * inv_t2
        total = total + term
    return total / t


def mills_ratio_inv(x):
    """Inverse Mills ratio phi(x)/Phi(x).

    Direct ratio for ``x >= -8``; below that the reciprocal of the asymptotic
    expansion of Phi(x)/phi(x) is used so the value stays finite and close to
    ``-x + 1/(-x)``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    direct = x >= MILLS_SWITCH
    xd = x[direct]
    out[direct] = norm_pdf(xd) / sc.ndtr(xd)
    tail = ~direct
    if np.any(tail):
        out[tail] = 1.0 / _mills_ratio_asymptotic(-x[tail])
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class TruncatedNormalSpec:
    """N(mu, sigma^2) truncated to (0, inf)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def tn_moments(spec, k_max):
    """Raw moments E(W^1) .. E(W^k_max) of W ~ TN(mu, sigma^2; (0, inf)).

    Uses E(W) = mu + sigma * phi(mu/sigma)/Phi(mu/sigma) and the recursion
    E(W^k) = (k-1) sigma^2 E(W^{k-2}) + mu E(W^{k-1}).
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    mu, sigma = float(spec.mu), float(spec.sigma)
    moments = [1.0, mu + sigma * float(mills_ratio_inv(mu / sigma))]
    for k in range(2, k_max + 1):
        moments.append((k - 1) * sigma**2 * moments[k - 2] + mu * moments[k - 1])
    return moments[1:]


def tn_first_two_moments(mu, sigma):
    """Vectorised E(W), E(W^2) for arrays of truncation locations/scales."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    A = mu / sigma
    ratio = mills_ratio_inv(A)
    w1 = sigma * (A + ratio)
    w2 = sigma**2 * (1.0 + A * (A + ratio))
    return w1, w2
