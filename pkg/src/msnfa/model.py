"""SNFA components and the MSNFA / MFA mixture."""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .rmsn import C_HALF_NORMAL, RmsnParams, make_rng, rmsn_log_pdf, rmsn_sample

C = C_HALF_NORMAL
K_SKEW = 1.0 - C * C  # 1 - c^2, the variance of |U1|


class Family(str, Enum):
    MSNFA = "msnfa"
    MFA = "mfa"


def _delta_root_coef(lam):
    s = float(lam @ lam)
    r = np.sqrt(1.0 + K_SKEW * s)
    return s, r


def delta_matrix(lam):
    lam = np.asarray(lam, dtype=float)
    return np.eye(lam.shape[0]) + K_SKEW * np.outer(lam, lam)


def delta_sqrt(lam):
    """Symmetric square root of Delta = I + (1 - c^2) lam lam'.

    Delta has eigenvalue 1 + (1 - c^2)|lam|^2 along lam and 1 elsewhere, so the
    root is I + (r - 1)/|lam|^2 lam lam' with r = sqrt(1 + (1 - c^2)|lam|^2).
    (r - 1)/|lam|^2 is rewritten as (1 - c^2)/(r + 1) to stay exact near lam = 0.
    """
    lam = np.asarray(lam, dtype=float)
    _, r = _delta_root_coef(lam)
    return np.eye(lam.shape[0]) + (K_SKEW / (r + 1.0)) * np.outer(lam, lam)


def delta_inv_sqrt(lam):
    lam = np.asarray(lam, dtype=float)
    _, r = _delta_root_coef(lam)
    return np.eye(lam.shape[0]) - (K_SKEW / (r * (r + 1.0))) * np.outer(lam, lam)


@dataclass(frozen=True, eq=False)
class SnfaComponent:
    """One skew-normal factor analyser: Y = mu + B U + e, e ~ N(0, diag(d))."""

    mu: np.ndarray
    B: np.ndarray
    d: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        p, q = B.shape
        if mu.shape != (p,) or d.shape != (p,) or lam.shape != (q,):
            raise ValueError(
                f"inconsistent shapes mu{mu.shape} B{B.shape} d{d.shape} lambda{lam.shape}"
            )
        if q >= p:
            raise ValueError(f"need q < p, got q={q}, p={p}")
        if not np.all(np.isfinite(np.concatenate([mu, B.ravel(), d, lam]))):
            raise ValueError("component parameters must be finite")
        if np.any(d <= 0):
            raise ValueError("uniquenesses d must be positive")
        for name, val in (("mu", mu), ("B", B), ("d", d), ("lam", lam)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def from_tilde(cls, mu, B_tilde, d, lam):
        """Build from scaled loadings B~ = B Delta^{-1/2}."""
        return cls(mu, np.asarray(B_tilde) @ delta_sqrt(lam), d, lam)

    @property
    def p(self):
        return self.B.shape[0]

    @property
    def q(self):
        return self.B.shape[1]

    @cached_property
    def delta(self):
        return delta_matrix(self.lam)

    @cached_property
    def B_tilde(self):
        return self.B @ delta_inv_sqrt(self.lam)

    @cached_property
    def alpha(self):
        return self.B_tilde @ self.lam

    @cached_property
    def sigma(self):
        Bt = self.B_tilde
        return Bt @ Bt.T + np.diag(self.d)

    @cached_property
    def marginal(self):
        return RmsnParams(self.mu - C * self.alpha, self.sigma, self.alpha)

    def replace(self, **kw):
        vals = dict(mu=self.mu, B=self.B, d=self.d, lam=self.lam)
        vals.update(kw)
        return SnfaComponent(**vals)


def component_marginal(comp):
    """Marginal law of Y given membership: rSN_p(mu - c alpha, Sigma, alpha)."""
    return comp.marginal


@dataclass(frozen=True, eq=False)
class MsnfaModel:
    weights: np.ndarray
    components: tuple
    family: Family = field(default=Family.MSNFA)

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        comps = tuple(self.components)
        fam = Family(self.family)
        if len(comps) == 0 or w.shape != (len(comps),):
            raise ValueError("need one weight per component")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must be positive and sum to 1, got {w}")
        p, q = comps[0].p, comps[0].q
        if any(c.p != p or c.q != q for c in comps):
            raise ValueError("all components must share p and q")
        if fam is Family.MFA and any(np.any(c.lam != 0) for c in comps):
            raise ValueError("MFA components must have lambda = 0")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "family", fam)

    @property
    def g(self):
        return len(self.components)

    @property
    def p(self):
        return self.components[0].p

    @property
    def q(self):
        return self.components[0].q

    def permuted(self, order):
        w = self.weights[list(order)]
        return MsnfaModel(w / w.sum(), [self.components[i] for i in order], self.family)


def component_log_densities(model, X):
    """g x n matrix of log pi_i + log psi(y_j; theta_i)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty((model.g, X.shape[0]))
    for i, comp in enumerate(model.components):
        out[i] = np.log(model.weights[i]) + rmsn_log_pdf(comp.marginal, X)
    return out


def mixture_log_pdf(model, x):
    x = np.asarray(x, dtype=float)
    vals = logsumexp(component_log_densities(model, x), axis=0)
    return float(vals[0]) if x.ndim == 1 else vals


def log_likelihood(model, data):
    return float(np.sum(mixture_log_pdf(model, np.atleast_2d(data))))


def param_count(p, q, g, family):
    """Free parameters with the upper-triangle-zero constraint on each B."""
    if not 1 <= q < p:
        raise ValueError(f"need 1 <= q < p, got q={q}, p={p}")
    if g < 1:
        raise ValueError("g must be >= 1")
    per = p * (q + 2) - q * (q - 1) // 2
    if Family(family) is Family.MSNFA:
        per += q
    return g * per + (g - 1)


def mixture_sample(model, n, seed):
    """Draw ``n`` observations and their true component labels.

    Labels use stream 0 of ``seed``; component ``i`` draws from stream ``i + 1``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    labels = make_rng(seed, 0).choice(model.g, size=n, p=model.weights)
    Y = np.empty((n, model.p))
    for i, comp in enumerate(model.components):
        idx = np.flatnonzero(labels == i)
        if idx.size:
            Y[idx] = rmsn_sample(comp.marginal, idx.size, make_rng(seed, i + 1))
    return Y, labels
