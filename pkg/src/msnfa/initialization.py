"""Starting values and multi-start orchestration.

Recipe: k-means partition -> per-cluster factor analysis of the centred
cluster -> skewness start from the provisional factor scores.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .ecm import FitConfig, default_d_floor, fit
from .errors import AllStartsFailed, MSNFAError, TinyCluster
from .model import Family, MsnfaModel, SnfaComponent
from .rmsn import make_rng

log = logging.getLogger(__name__)

# sup of |skewness| of a univariate skew-normal
SKEW_MAX = (4.0 - np.pi) / 2.0 * (2.0 / np.pi) ** 1.5 / (1.0 - 2.0 / np.pi) ** 1.5
SKEW_CAP = 0.995 * SKEW_MAX


@dataclass(frozen=True)
class InitStrategy:
    kmeans_restarts: int = 5
    fa_method: str = "pca"  # "pca" or "ml"
    lambda_method: str = "moment"  # "moment" or "zero"
    seed: int = 0

    def __post_init__(self):
        if self.kmeans_restarts < 1:
            raise ValueError("kmeans_restarts must be >= 1")
        if self.fa_method not in ("pca", "ml"):
            raise ValueError(f"unknown fa_method {self.fa_method!r}")
        if self.lambda_method not in ("moment", "zero"):
            raise ValueError(f"unknown lambda_method {self.lambda_method!r}")


def _sq_dists(X, centers):
    return (
        np.sum(X * X, axis=1)[:, None]
        - 2.0 * X @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    ).clip(min=0.0)


def _plusplus(X, g, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = _sq_dists(X, np.array(centers)).min(axis=1)
    for _ in range(1, g):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers.append(X[idx])
        d2 = np.minimum(d2, _sq_dists(X, X[idx][None]).ravel())
    return np.array(centers)


def lloyd(X, centers, max_iter=300):
    """Lloyd iterations from ``centers``; returns (labels, centers, objective trace).

    An emptied cluster is moved onto the point farthest from its current centre.
    """
    centers = centers.copy()
    g = centers.shape[0]
    labels = None
    trace = []
    for _ in range(max_iter):
        d2 = _sq_dists(X, centers)
        new = np.argmin(d2, axis=1)
        best = d2[np.arange(len(X)), new]
        trace.append(float(best.sum()))
        for k in range(g):
            if not np.any(new == k):
                far = int(np.argmax(best))
                new[far] = k
                best[far] = 0.0
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in range(g):
            centers[k] = X[labels == k].mean(axis=0)
    trace.append(float(_sq_dists(X, centers)[np.arange(len(X)), labels].sum()))
    return labels, centers, trace


def kmeans(data, g, restarts=1, seed=0):
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n = X.shape[0]
    if g > n:
        raise ValueError(f"cannot form {g} clusters from {n} points")
    if g == 1:
        return np.zeros(n, dtype=int)
    rng = make_rng(seed)
    best_labels, best_obj = None, np.inf
    for _ in range(max(1, restarts)):
        labels, _, trace = lloyd(X, _plusplus(X, g, rng))
        if trace[-1] < best_obj:
            best_labels, best_obj = labels, trace[-1]
    return best_labels


def _sign_fix(B):
    for k in range(B.shape[1]):
        nz = np.flatnonzero(np.abs(B[:, k]) > 0)
        if nz.size and B[nz[0], k] < 0:
            B[:, k] = -B[:, k]
    return B


def pca_fa(S, q, d_floor):
    """Closed-form FA start: B = Gamma_q (Lambda_q - sbar I)^{1/2}, D = diag(S - BB')."""
    evals, evecs = linalg.eigh(S)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    sbar = max(float(np.mean(evals[q:])), 0.0)
    scale = np.sqrt(np.clip(evals[:q] - sbar, 1e-8 * max(evals[0], 1e-300), None))
    B = _sign_fix(evecs[:, :q] * scale)
    d = np.maximum(np.diag(S) - np.sum(B * B, axis=1), d_floor)
    return B, d


def ml_fa(S, q, d_floor, n_iter=100, tol=1e-8):
    """Classical FA EM on a covariance matrix, started from the PCA solution."""
    B, d = pca_fa(S, q, d_floor)
    prev = -np.inf
    for _ in range(n_iter):
        sigma = B @ B.T + np.diag(d)
        beta = linalg.solve(sigma, B, assume_a="pos").T
        SbT = S @ beta.T
        B = SbT @ linalg.inv(np.eye(q) - beta @ B + beta @ SbT)
        d = np.maximum(np.diag(S - B @ beta @ S), d_floor)
        _, logdet = np.linalg.slogdet(B @ B.T + np.diag(d))
        obj = -0.5 * (logdet + np.trace(linalg.solve(B @ B.T + np.diag(d), S, assume_a="pos")))
        if obj - prev < tol * max(1.0, abs(obj)):
            break
        prev = obj
    return _sign_fix(B), d


def sample_skewness(x):
    x = np.asarray(x, dtype=float)
    m = x - x.mean()
    m2 = np.mean(m * m)
    return float(np.mean(m**3) / m2**1.5) if m2 > 0 else 0.0


def skewness_to_lambda(gamma):
    """Invert the univariate skew-normal skewness map, then delta -> lambda.

    |gamma| is capped at 0.995 of its supremum so the result stays finite.
    """
    gamma = float(np.clip(gamma, -SKEW_CAP, SKEW_CAP))
    r = (2.0 * abs(gamma) / (4.0 - np.pi)) ** (1.0 / 3.0)
    mean_z = r / np.sqrt(1.0 + r * r)
    delta = mean_z / np.sqrt(2.0 / np.pi)
    delta = min(delta, 1.0 - 1e-12)
    return np.sign(gamma) * delta / np.sqrt(1.0 - delta * delta)


def init_model(data, g, q, strategy=InitStrategy(), family=Family.MSNFA):
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, p = X.shape
    if not 1 <= q < p:
        raise ValueError(f"need 1 <= q < p, got q={q}, p={p}")
    family = Family(family)
    labels = kmeans(X, g, strategy.kmeans_restarts, strategy.seed)
    d_floor = default_d_floor(X)
    weights, comps = [], []
    for k in range(g):
        Xk = X[labels == k]
        if Xk.shape[0] < q + 2:
            raise TinyCluster(f"cluster {k} has {Xk.shape[0]} members, need >= {q + 2}")
        mu = Xk.mean(axis=0)
        S = np.cov(Xk, rowvar=False)
        B, d = (pca_fa if strategy.fa_method == "pca" else ml_fa)(S, q, d_floor)
        lam = np.zeros(q)
        if family is Family.MSNFA and strategy.lambda_method == "moment":
            BDinv = B / d[:, None]
            Cmat = linalg.inv(np.eye(q) + B.T @ BDinv)
            scores = (Xk - mu) @ BDinv @ Cmat
            lam = np.array([skewness_to_lambda(sample_skewness(scores[:, a])) for a in range(q)])
        weights.append(Xk.shape[0] / n)
        comps.append(SnfaComponent(mu, B, d, lam))
    weights = np.asarray(weights)
    return MsnfaModel(weights / weights.sum(), comps, family)


def start_seed(seed, start):
    return int(np.random.SeedSequence([int(seed), int(start)]).generate_state(1, np.uint64)[0])


def _run_start(args):
    data, g, q, config, strategy, s = args
    try:
        init = init_model(data, g, q, replace(strategy, seed=start_seed(config.seed, s)), config.family)
        res = fit(data, g, q, config, init)
        res.start = s
        return s, res, None
    except (MSNFAError, np.linalg.LinAlgError) as err:
        return s, None, f"{type(err).__name__}: {err}"


def multi_start_fit(data, g, q, config=FitConfig(), strategy=InitStrategy(), jobs=1):
    """Fit from ``config.n_starts`` independent starts; keep the highest log-likelihood."""
    X = np.atleast_2d(np.asarray(data, dtype=float))
    tasks = [(X, g, q, config, strategy, s) for s in range(config.n_starts)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outcomes = list(ex.map(_run_start, tasks))
    else:
        outcomes = [_run_start(t) for t in tasks]
    best, failures = None, []
    for s, res, err in outcomes:
        if res is None:
            log.info("start %d failed: %s", s, err)
            failures.append((s, err))
        elif best is None or res.loglik > best.loglik:
            best = res
    if best is None:
        raise AllStartsFailed(failures)
    best.failures = failures
    return best
