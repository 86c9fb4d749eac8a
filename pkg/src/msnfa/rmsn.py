"""Restricted multivariate skew-normal law rSN_p(mu, Sigma, lambda).

X = lambda |U1| + U2 with U1 ~ N(0, 1) independent of U2 ~ N_p(mu, Sigma).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg

from .errors import DegenerateDispersion, RankDeficient
from .special import LOG_SQRT_2PI, norm_log_cdf

C_HALF_NORMAL = np.sqrt(2.0 / np.pi)  # E|U1| for U1 ~ N(0, 1)
SIGMA2_MIN = 1e-14

_GOLDEN64 = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def make_rng(seed, stream=0):
    """PCG64 generator for ``(seed, stream)``.

    Streams are split by offsetting the seed with ``stream * 0x9E3779B97F4A7C15``
    (mod 2**64), so component ``i`` of a sampler seeded with ``s`` always draws
    from the same stream no matter how the work is scheduled.
    """
    key = (int(seed) + int(stream) * _GOLDEN64) & _MASK64
    return np.random.Generator(np.random.PCG64(key))


def cholesky(a, exc=DegenerateDispersion, what="matrix"):
    try:
        return linalg.cholesky(a, lower=True)
    except linalg.LinAlgError as err:
        raise exc(f"{what} is not positive definite") from err


@dataclass(frozen=True, eq=False)
class RmsnParams:
    mu: np.ndarray
    sigma: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        p = mu.shape[0]
        if mu.ndim != 1 or sigma.shape != (p, p) or lam.shape != (p,):
            raise ValueError(
                f"inconsistent shapes mu{mu.shape} sigma{sigma.shape} lambda{lam.shape}"
            )
        if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12 * max(1.0, np.abs(sigma).max())):
            raise ValueError("sigma is not symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "_chol_sigma", cholesky(sigma, what="Sigma"))

    @property
    def p(self):
        return self.mu.shape[0]

    @cached_property
    def omega(self):
        return self.sigma + np.outer(self.lam, self.lam)

    @cached_property
    def chol_omega(self):
        return cholesky(self.omega, what="Omega")

    @cached_property
    def omega_inv_lam(self):
        return linalg.cho_solve((self.chol_omega, True), self.lam)

    @cached_property
    def sigma2(self):
        """1 - lambda' Omega^{-1} lambda, the conditional scale of the skewing variable."""
        s2 = 1.0 - self.lam @ self.omega_inv_lam
        if s2 <= SIGMA2_MIN:
            raise DegenerateDispersion(f"1 - lambda' Omega^-1 lambda = {s2:.3g} is not positive")
        return s2


def rmsn_log_pdf(params, x):
    """log f(x) = log 2 + log phi_p(x; mu, Omega) + log Phi(xi / sigma).

    ``x`` may be a single point (p,) or a batch (n, p).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    L = params.chol_omega
    resid = X - params.mu
    z = linalg.solve_triangular(L, resid.T, lower=True)
    maha = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    log_phi = -0.5 * maha - 0.5 * logdet - params.p * LOG_SQRT_2PI
    xi = resid @ params.omega_inv_lam
    out = np.log(2.0) + log_phi + norm_log_cdf(xi / np.sqrt(params.sigma2))
    return float(out[0]) if single else out


def rmsn_pdf(params, x):
    return np.exp(rmsn_log_pdf(params, x))


def rmsn_sample(params, n, rng_seed):
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(rng_seed) if not isinstance(rng_seed, np.random.Generator) else rng_seed
    u1 = rng.standard_normal(n)
    u2 = params.mu + rng.standard_normal((n, params.p)) @ params._chol_sigma.T
    return np.abs(u1)[:, None] * params.lam + u2


def rmsn_mean_cov(params):
    c = C_HALF_NORMAL
    mean = params.mu + c * params.lam
    cov = params.sigma + (1.0 - c * c) * np.outer(params.lam, params.lam)
    return mean, cov


def rmsn_log_mgf(params, t):
    t = np.asarray(t, dtype=float)
    return float(
        np.log(2.0) + t @ params.mu + 0.5 * t @ params.omega @ t + norm_log_cdf(params.lam @ t)
    )


def rmsn_affine(params, L):
    """Parameters of LX for X ~ rSN_p(mu, Sigma, lambda) and full-row-rank L (q x p)."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    q, p = L.shape
    if p != params.p or not 1 <= q <= p:
        raise ValueError(f"L must be q x {params.p} with 1 <= q <= {params.p}, got {L.shape}")
    if np.linalg.matrix_rank(L) < q:
        raise RankDeficient(f"L has rank {np.linalg.matrix_rank(L)} < {q}")
    sigma = L @ params.sigma @ L.T
    sigma = 0.5 * (sigma + sigma.T)
    try:
        return RmsnParams(L @ params.mu, sigma, L @ params.lam)
    except DegenerateDispersion as err:
        raise RankDeficient("L Sigma L' is not positive definite") from err
