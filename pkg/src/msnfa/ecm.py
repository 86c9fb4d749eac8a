"""ECM fitting of MSNFA / MFA mixtures.

Internally each component is handled in the scaled parameterisation
B~ = B Delta^{-1/2}, under which the latent factors are

    U~ | w ~ N_q((w - c) lam, I_q),    W ~ TN(0, 1; (0, inf)),
    Y | u~, w ~ N_p(mu + B~ u~, D).

The conditional expectations below are exact under this hierarchy; the CM
steps maximise the expected complete-data log-likelihood over
(pi, mu, B~, D, lam) in that order.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from .errors import EmptyComponent, NumericalBreakdown, SingularMoment
from .model import C, Family, MsnfaModel, SnfaComponent, delta_inv_sqrt
from .rmsn import SIGMA2_MIN
from .special import LOG_SQRT_2PI, norm_log_cdf, tn_first_two_moments

log = logging.getLogger(__name__)

D_FLOOR_REL = 1e-6


@dataclass
class EStepStats:
    """Conditional expectations for every (component, observation) pair.

    Arrays are indexed ``[i, j]`` with ``i`` the component and ``j`` the
    observation; ``eta``/``kappa`` carry a trailing factor axis and ``Psi`` two.
    ``Psi`` is assembled on first access; the CM-steps only need its
    responsibility-weighted sums (``psi_sum``).
    """

    z: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    eta: np.ndarray
    kappa: np.ndarray
    log_dens: np.ndarray  # log pi_i + log psi(y_j; theta_i)
    loglik: float
    a: np.ndarray = field(repr=False)
    s2: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    Cmat: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)

    @property
    def h(self):
        return self.w2 - 2.0 * C * self.w1 + C * C

    @property
    def zeta(self):
        return self.kappa - C * self.eta

    def _moment_parts(self, i):
        # Psi_ij = C + C E[(v + lam (w - c))(.)'] C; with u = C v, l = C lam this is
        # C + u u' + (w1 - c)(u l' + l u') + h l l'
        return self.v[i] @ self.Cmat[i], self.Cmat[i] @ self.lam[i]

    def psi_sum(self, i, weights):
        """sum_j weights_j Psi_ij for component ``i`` without forming each Psi_ij."""
        u, ell = self._moment_parts(i)
        wu = weights[:, None] * u
        cross = wu.T @ (self.w1[i] - C)
        out = (
            weights.sum() * self.Cmat[i]
            + u.T @ wu
            + np.outer(cross, ell)
            + np.outer(ell, cross)
            + (weights @ self.h[i]) * np.outer(ell, ell)
        )
        return 0.5 * (out + out.T)

    @cached_property
    def Psi(self):
        g, n, q = self.eta.shape
        out = np.empty((g, n, q, q))
        for i in range(g):
            u, ell = self._moment_parts(i)
            cu = (self.w1[i] - C)[:, None, None] * (u[:, :, None] * ell[None, None, :])
            out[i] = (
                self.Cmat[i][None]
                + u[:, :, None] * u[:, None, :]
                + cu
                + np.swapaxes(cu, 1, 2)
                + self.h[i][:, None, None] * np.outer(ell, ell)[None]
            )
        return out


@dataclass
class FitConfig:
    tol: float = 1e-6
    max_iter: int = 5000
    n_starts: int = 1
    seed: int = 0
    family: Family = Family.MSNFA
    d_floor_rel: float = D_FLOOR_REL

    def __post_init__(self):
        self.family = Family(self.family)
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")


@dataclass
class FitResult:
    model: MsnfaModel
    loglik_trace: np.ndarray
    z_final: np.ndarray
    map_labels: np.ndarray
    converged: bool
    iterations: int
    start: int = 0
    failures: list = field(default_factory=list)

    @property
    def loglik(self):
        return float(self.loglik_trace[-1])


def _component_estep(comp, X):
    n, p = X.shape
    q = comp.q
    Bt, d, lam, alpha = comp.B_tilde, comp.d, comp.lam, comp.alpha
    omega = Bt @ Bt.T + np.diag(d) + np.outer(alpha, alpha)
    try:
        L = linalg.cholesky(omega, lower=True)
    except linalg.LinAlgError as err:
        raise NumericalBreakdown("Omega is not positive definite") from err
    omega_inv_alpha = linalg.cho_solve((L, True), alpha)
    s2 = 1.0 - alpha @ omega_inv_alpha
    if not s2 > SIGMA2_MIN:
        raise NumericalBreakdown(f"1 - alpha' Omega^-1 alpha = {s2:.3g}")
    s = np.sqrt(s2)

    r = X - comp.mu + C * alpha
    zr = linalg.solve_triangular(L, r.T, lower=True)
    a = r @ omega_inv_alpha
    log_psi = (
        np.log(2.0)
        - 0.5 * np.sum(zr * zr, axis=0)
        - np.sum(np.log(np.diag(L)))
        - p * LOG_SQRT_2PI
        + norm_log_cdf(a / s)
    )

    BtDinv = Bt / d[:, None]
    try:
        Lc = linalg.cholesky(np.eye(q) + Bt.T @ BtDinv, lower=True)
    except linalg.LinAlgError as err:
        raise NumericalBreakdown("I + B~' D^-1 B~ is not positive definite") from err
    Cmat = linalg.cho_solve((Lc, True), np.eye(q))
    Cmat = 0.5 * (Cmat + Cmat.T)
    v = (X - comp.mu) @ BtDinv

    w1, w2 = tn_first_two_moments(a, s)
    eta = (v + np.outer(w1 - C, lam)) @ Cmat
    kappa = (v * w1[:, None] + np.outer(w2 - C * w1, lam)) @ Cmat
    return log_psi, a, s2, w1, w2, eta, kappa, v, Cmat


def e_step(model, data):
    X = np.atleast_2d(np.asarray(data, dtype=float))
    g, n, q = model.g, X.shape[0], model.q
    log_dens = np.empty((g, n))
    w1 = np.empty((g, n))
    w2 = np.empty((g, n))
    a = np.empty((g, n))
    s2 = np.empty(g)
    eta = np.empty((g, n, q))
    kappa = np.empty((g, n, q))
    v = np.empty((g, n, q))
    Cmat = np.empty((g, q, q))
    for i, comp in enumerate(model.components):
        lp, a[i], s2[i], w1[i], w2[i], eta[i], kappa[i], v[i], Cmat[i] = _component_estep(comp, X)
        log_dens[i] = np.log(model.weights[i]) + lp
    top = log_dens.max(axis=0)
    expd = np.exp(log_dens - top)
    tot = expd.sum(axis=0)
    loglik = float(np.sum(top + np.log(tot)))
    if not np.isfinite(loglik):
        raise NumericalBreakdown("log-likelihood is not finite")
    z = expd / tot
    lam = np.array([c.lam for c in model.components])
    return EStepStats(z, w1, w2, eta, kappa, log_dens, loglik, a=a, s2=s2, v=v, Cmat=Cmat, lam=lam)


def default_d_floor(data, rel=D_FLOOR_REL):
    var = np.var(np.atleast_2d(data), axis=0, ddof=1) if len(data) > 1 else np.ones(data.shape[1])
    var = np.where(var > 0, var, 1.0)
    return rel * var


def cm_steps(stats, data, prev, d_floor=None, family=None):
    """One pass of CM-steps 1-5 given E-step statistics computed at ``prev``.

    The location update uses the previous B~ and the uniqueness update uses the
    freshly updated (mu, B~). The skewness update is skipped for MFA.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n = X.shape[0]
    q = prev.q
    family = Family(family or prev.family)
    if d_floor is None:
        d_floor = default_d_floor(X)
    n_i = stats.z.sum(axis=1)
    for i, ni in enumerate(n_i):
        if ni < q + 1:
            raise EmptyComponent(f"component {i} has effective size {ni:.3g} < q + 1")
    weights = n_i / n
    weights = weights / weights.sum()

    comps = []
    for i, comp in enumerate(prev.components):
        zi, ni = stats.z[i], n_i[i]
        eta = stats.eta[i]
        # CM-2: location, with the current B~
        mu = zi @ (X - eta @ comp.B_tilde.T) / ni
        # CM-3: scaled loadings
        R = X - mu
        S_yeta = (R * zi[:, None]).T @ eta
        S_psi = stats.psi_sum(i, zi)
        try:
            Lp = linalg.cholesky(S_psi, lower=True)
        except linalg.LinAlgError as err:
            raise SingularMoment(f"component {i}: sum z Psi is singular") from err
        Bt = linalg.cho_solve((Lp, True), S_yeta.T).T
        # CM-4: uniquenesses from Upsilon at the new (mu, B~)
        E = R - eta @ Bt.T
        cond_cov = S_psi - (eta * zi[:, None]).T @ eta
        d = (zi @ (E * E) + np.einsum("ka,ab,kb->k", Bt, cond_cov, Bt)) / ni
        d = np.maximum(d, d_floor)
        # CM-5: skewness
        if family is Family.MSNFA:
            lam = (zi @ stats.zeta[i]) / (zi @ stats.h[i])
        else:
            lam = np.zeros(q)
        comps.append(SnfaComponent.from_tilde(mu, Bt, d, lam))
    return MsnfaModel(weights, comps, family)


def _result(model, stats, trace, converged, iterations):
    return FitResult(
        model=model,
        loglik_trace=np.asarray(trace),
        z_final=stats.z,
        map_labels=np.argmax(stats.z, axis=0),
        converged=converged,
        iterations=iterations,
    )


def fit(data, g, q, config, init):
    """Alternate E- and CM-steps from ``init`` until the log-likelihood gain
    drops below ``config.tol`` or ``config.max_iter`` CM passes have run."""
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, p = X.shape
    if not q < p:
        raise ValueError(f"need q < p, got q={q}, p={p}")
    if init.g != g or init.q != q or init.p != p:
        raise ValueError("initial model does not match (g, q, p)")
    if n <= g * (q + 1):
        raise ValueError(f"need n > g (q + 1) = {g * (q + 1)}, got n={n}")
    family = Family(config.family)
    model = init
    if family is Family.MFA and any(np.any(c.lam != 0) for c in model.components):
        model = MsnfaModel(
            model.weights, [c.replace(lam=np.zeros(q)) for c in model.components], Family.MFA
        )
    d_floor = default_d_floor(X, config.d_floor_rel)
    stats = e_step(model, X)
    trace = [stats.loglik]
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        model = cm_steps(stats, X, model, d_floor=d_floor, family=family)
        stats = e_step(model, X)
        trace.append(stats.loglik)
        if trace[-1] - trace[-2] < config.tol:
            converged = True
            break
    log.debug("fit g=%d q=%d: %d iterations, loglik %.6f", g, q, it, trace[-1])
    return _result(model, stats, trace, converged, it)


def factor_scores(result, data, weighting="mixing"):
    """Predicted factor scores sum_i w_ij Delta_i^{-1/2} eta_ij.

    ``weighting="mixing"`` uses w_ij = pi_i; ``"posterior"`` uses the
    responsibilities z_ij instead.
    """
    model = result.model if isinstance(result, FitResult) else result
    stats = e_step(model, data)
    if weighting == "mixing":
        w = np.broadcast_to(model.weights[:, None], stats.z.shape)
    elif weighting == "posterior":
        w = stats.z
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    scores = np.zeros((stats.z.shape[1], model.q))
    for i, comp in enumerate(model.components):
        scores += w[i][:, None] * (stats.eta[i] @ delta_inv_sqrt(comp.lam))
    return scores
