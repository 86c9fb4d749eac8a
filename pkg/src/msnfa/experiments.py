"""Reusable experiment drivers (synthetic recovery)."""

from dataclasses import dataclass

import numpy as np

from .ecm import FitConfig
from .initialization import InitStrategy, multi_start_fit
from .model import Family, MsnfaModel, SnfaComponent, mixture_sample
from .selection import adjusted_rand_index, correct_classification_rate


@dataclass(frozen=True)
class RecoveryDesign:
    n: int = 2000
    p: int = 6
    q: int = 2
    separation: float = 4.0
    lam: tuple = (2.0, -1.0)
    weights: tuple = (0.4, 0.6)
    uniqueness: float = 0.5
    loading_seed: int = 20240


def recovery_truth(design=RecoveryDesign()):
    """Two SNFA components whose means differ by ``separation`` in every coordinate."""
    rng = np.random.default_rng(design.loading_seed)
    comps = []
    for i in range(2):
        B = rng.normal(scale=0.8, size=(design.p, design.q))
        comps.append(
            SnfaComponent(
                np.full(design.p, i * design.separation),
                B,
                np.full(design.p, design.uniqueness),
                np.asarray(design.lam, dtype=float),
            )
        )
    return MsnfaModel(np.asarray(design.weights), comps, Family.MSNFA)


@dataclass
class RecoveryOutcome:
    seed: int
    ari: float
    ccr: float
    weight_error: float
    loglik: float
    iterations: int

    def passed(self, ari_min=0.9, weight_tol=0.05):
        return self.ari >= ari_min and self.weight_error <= weight_tol


def recovery_trial(seed, n_starts=10, design=RecoveryDesign(), tol=1e-6, max_iter=5000):
    truth = recovery_truth(design)
    X, labels = mixture_sample(truth, design.n, seed)
    res = multi_start_fit(
        X, 2, design.q, FitConfig(tol=tol, max_iter=max_iter, n_starts=n_starts, seed=seed),
        InitStrategy(seed=seed),
    )
    # weights are matched through the best label permutation
    pred = res.map_labels
    w_hat = res.model.weights
    err = min(
        np.max(np.abs(w_hat[list(perm)] - truth.weights)) for perm in ((0, 1), (1, 0))
    )
    return RecoveryOutcome(
        seed=seed,
        ari=adjusted_rand_index(labels, pred),
        ccr=correct_classification_rate(labels, pred),
        weight_error=float(err),
        loglik=res.loglik,
        iterations=res.iterations,
    )
