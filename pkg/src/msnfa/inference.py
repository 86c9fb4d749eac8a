"""Score vector, observed information and standard errors.

Parameters are packed as (pi_1..pi_{g-1}) followed, per component, by
(mu, vec(B) column-major, diag(D), lambda); lambda is omitted for MFA. B is
the unconstrained p x q loading matrix, so the information matrix refers to
the rotation-unconstrained parameterisation.
"""

import warnings

import numpy as np
from scipy import linalg

from .ecm import e_step
from .errors import NotPositiveDefinite
from .model import K_SKEW, Family, MsnfaModel, SnfaComponent, delta_inv_sqrt


class InformationWarning(UserWarning):
    """The observed information is not positive definite at the given point."""


def _block_sizes(p, q, family):
    sizes = [("mu", p), ("B", p * q), ("d", p)]
    if Family(family) is Family.MSNFA:
        sizes.append(("lambda", q))
    return sizes


def flatten(model):
    parts = [model.weights[:-1]]
    for comp in model.components:
        parts += [comp.mu, comp.B.ravel(order="F"), comp.d]
        if model.family is Family.MSNFA:
            parts.append(comp.lam)
    return np.concatenate(parts)


def unflatten(theta, g, p, q, family):
    family = Family(family)
    theta = np.asarray(theta, dtype=float)
    w = theta[: g - 1]
    weights = np.append(w, 1.0 - w.sum())
    pos = g - 1
    comps = []
    for _ in range(g):
        vals = {}
        for name, size in _block_sizes(p, q, family):
            vals[name] = theta[pos : pos + size]
            pos += size
        comps.append(
            SnfaComponent(
                vals["mu"],
                vals["B"].reshape((p, q), order="F"),
                vals["d"],
                vals.get("lambda", np.zeros(q)),
            )
        )
    if pos != theta.size:
        raise ValueError(f"expected {pos} parameters, got {theta.size}")
    return MsnfaModel(weights, comps, family)


def parameter_names(g, p, q, family):
    names = [f"pi[{r}]" for r in range(g - 1)]
    for i in range(g):
        names += [f"comp{i}.mu[{k}]" for k in range(p)]
        names += [f"comp{i}.B[{k},{a}]" for a in range(q) for k in range(p)]
        names += [f"comp{i}.d[{k}]" for k in range(p)]
        if Family(family) is Family.MSNFA:
            names += [f"comp{i}.lambda[{a}]" for a in range(q)]
    return names


def score(model, data):
    """Analytic gradient of the observed log-likelihood (Fisher identity).

    The mu and d blocks follow from Y | u~ ~ N(mu + B~ u~, D). For B and
    lambda the latent factors are taken on the original scale
    U = Delta^{-1/2} U~, with U | w ~ N((w - c) lam / r, Delta^{-1}) and
    r^2 = 1 + (1 - c^2)|lam|^2, so that B enters only through Y | u and
    lambda only through the factor prior.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    st = e_step(model, X)
    n_i = st.z.sum(axis=1)
    k = K_SKEW
    parts = [n_i[:-1] / model.weights[:-1] - n_i[-1] / model.weights[-1]]
    for i, comp in enumerate(model.components):
        zi = st.z[i]
        eta = st.eta[i]
        Bt, d, lam = comp.B_tilde, comp.d, comp.lam
        R = X - comp.mu
        E = R - eta @ Bt.T
        S_psi = st.psi_sum(i, zi)
        s_mu = (zi @ E) / d

        Dm = delta_inv_sqrt(lam)
        S_yeta = (R * zi[:, None]).T @ eta
        s_B = ((S_yeta - Bt @ S_psi) @ Dm) / d[:, None]

        cond = S_psi - (eta * zi[:, None]).T @ eta
        ups = zi @ (E * E) + np.einsum("ka,ab,kb->k", Bt, cond, Bt)
        s_d = 0.5 * (ups / d**2 - n_i[i] / d)

        parts += [s_mu, s_B.ravel(order="F"), s_d]
        if model.family is Family.MSNFA:
            r2 = 1.0 + k * lam @ lam
            r = np.sqrt(r2)
            sum_zeta = zi @ st.zeta[i]
            s_lam = (
                n_i[i] * k * lam / r2
                - k * Dm @ S_psi @ lam / r
                + r * Dm @ sum_zeta
                + k * (lam @ sum_zeta) * lam / r2
                - (zi @ st.h[i]) * lam
            )
            parts.append(s_lam)
    return np.concatenate(parts)


def _positive_mask(g, p, q, family):
    mask = [np.ones(g - 1, dtype=bool)]
    for _ in range(g):
        for name, size in _block_sizes(p, q, family):
            mask.append(np.full(size, name == "d"))
    return np.concatenate(mask)


def step_sizes(theta, eta_step=1e-4, positive=None):
    """h_j = max(eta, eta |theta_j|); entries flagged ``positive`` are capped at
    theta_j / 2 so both evaluation points stay admissible."""
    h = np.maximum(eta_step, eta_step * np.abs(theta))
    if positive is not None:
        h = np.where(positive, np.minimum(h, 0.5 * np.abs(theta)), h)
    return h


def observed_info(model, data, eta_step=1e-4, strict=False):
    """-(G + G')/2 with G the central-difference Jacobian of the score.

    Column j of G is [s(theta + h_j e_j) - s(theta - h_j e_j)] / (2 h_j) with
    h_j = max(eta, eta |theta_j|). A non positive definite result is reported
    through :class:`InformationWarning` (or raised when ``strict``).
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    theta = flatten(model)
    g, p, q, fam = model.g, model.p, model.q, model.family
    hs = step_sizes(theta, eta_step, _positive_mask(g, p, q, fam))
    m = theta.size
    G = np.empty((m, m))
    for j in range(m):
        tp, tm = theta.copy(), theta.copy()
        tp[j] += hs[j]
        tm[j] -= hs[j]
        G[:, j] = (score(unflatten(tp, g, p, q, fam), X) - score(unflatten(tm, g, p, q, fam), X)) / (
            2.0 * hs[j]
        )
    info = -0.5 * (G + G.T)
    if not is_positive_definite(info):
        msg = "observed information is not positive definite (boundary or saddle solution?)"
        if strict:
            raise NotPositiveDefinite(msg)
        warnings.warn(msg, InformationWarning, stacklevel=2)
    return info


def is_positive_definite(a):
    try:
        linalg.cholesky(a, lower=True)
        return True
    except linalg.LinAlgError:
        return False


def standard_errors(info, tol=1e-12):
    """Square roots of the diagonal of info^{-1}, as a masked array.

    A Cholesky factorisation is run with symmetric elimination; a parameter
    whose pivot is not positive is masked (unavailable) and removed before
    the remaining parameters are processed.
    """
    info = np.asarray(info, dtype=float)
    if not np.allclose(info, info.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(info).max())):
        raise ValueError("information matrix must be symmetric")
    m = info.shape[0]
    keep = np.ones(m, dtype=bool)
    scale = max(1.0, float(np.max(np.abs(np.diag(info))))) if m else 1.0
    while True:
        idx = np.flatnonzero(keep)
        sub = info[np.ix_(idx, idx)]
        bad = _first_bad_pivot(sub, tol * scale)
        if bad is None:
            break
        keep[idx[bad]] = False
    se = np.zeros(m)
    idx = np.flatnonzero(keep)
    if idx.size:
        L = linalg.cholesky(info[np.ix_(idx, idx)], lower=True)
        Linv = linalg.solve_triangular(L, np.eye(idx.size), lower=True)
        se[idx] = np.sqrt(np.sum(Linv * Linv, axis=0))
    return np.ma.masked_array(se, mask=~keep)


def _first_bad_pivot(a, tol):
    """Index of the first non-positive pivot of an unpivoted Cholesky, or None."""
    a = a.copy()
    n = a.shape[0]
    for j in range(n):
        piv = a[j, j]
        if not piv > tol:
            return j
        col = a[j + 1 :, j] / np.sqrt(piv)
        a[j + 1 :, j + 1 :] -= np.outer(col, col)
    return None


def se_report(model, data, eta_step=1e-4, d_floor=None):
    """(name, estimate, se-or-None) rows in packing order.

    Uniquenesses sitting on ``d_floor`` are reported as unavailable.
    """
    theta = flatten(model)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InformationWarning)
        info = observed_info(model, data, eta_step)
    se = standard_errors(info)
    names = parameter_names(model.g, model.p, model.q, model.family)
    mask = np.ma.getmaskarray(se).copy()
    if d_floor is not None:
        for i, comp in enumerate(model.components):
            for k in np.flatnonzero(comp.d <= np.asarray(d_floor) * (1 + 1e-9)):
                mask[names.index(f"comp{i}.d[{k}]")] = True
    return [
        (nm, float(t), None if bad else float(s)) for nm, t, s, bad in zip(names, theta, se.data, mask)
    ]
