"""Information criteria and external clustering agreement."""

from dataclasses import asdict, dataclass
from itertools import permutations
from math import comb

import numpy as np
from scipy.optimize import linear_sum_assignment

CCR_BRUTE_FORCE_MAX = 8


@dataclass
class CriteriaRow:
    g: int
    q: int
    loglik: float
    m: int
    bic: float
    icl: float
    awe: float
    ent: float
    family: str = ""
    ari: float | None = None
    ccr: float | None = None

    def as_dict(self):
        return asdict(self)


def entropy(z):
    """-sum z log z over a g x n responsibility matrix, with 0 log 0 = 0."""
    z = np.asarray(z, dtype=float)
    pos = z > 0
    return float(-np.sum(z[pos] * np.log(z[pos]))) + 0.0


def _check_simplex(z, tol=1e-9):
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if np.any(z < -tol) or np.any(np.abs(z.sum(axis=0) - 1.0) > tol):
        raise ValueError("columns of z must lie on the probability simplex")
    return np.clip(z, 0.0, 1.0)


def criteria(loglik, m, n, z, g=None, q=None, family=""):
    """BIC = l - (m/2) log n, ICL = BIC - ENT(z), AWE = ICL - m (3/2 + log n).

    All three are on the "larger is better" scale.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    z = _check_simplex(z)
    if z.shape[1] != n:
        raise ValueError(f"z has {z.shape[1]} columns, expected n={n}")
    ent = entropy(z)
    bic = loglik - 0.5 * m * np.log(n)
    icl = bic - ent
    awe = icl - m * (1.5 + np.log(n))
    return CriteriaRow(
        g=z.shape[0] if g is None else g,
        q=q,
        loglik=float(loglik),
        m=int(m),
        bic=float(bic),
        icl=float(icl),
        awe=float(awe),
        ent=ent,
        family=str(family),
    )


def classification_table(truth, pred):
    """Counts with rows = true classes, columns = predicted clusters.

    Returns ``(table, true_labels, pred_labels)``; labels are sorted.
    """
    truth, pred = np.asarray(truth), np.asarray(pred)
    if truth.shape != pred.shape:
        raise ValueError("truth and pred must have equal length")
    t_lab, t_idx = np.unique(truth, return_inverse=True)
    p_lab, p_idx = np.unique(pred, return_inverse=True)
    table = np.zeros((t_lab.size, p_lab.size), dtype=int)
    np.add.at(table, (t_idx, p_idx), 1)
    return table, t_lab, p_lab


def adjusted_rand_index(a, b):
    a, b = np.asarray(a), np.asarray(b)
    n = a.size
    if n == 0:
        raise ValueError("empty partitions")
    table, _, _ = classification_table(a, b)
    sum_cells = sum(comb(int(x), 2) for x in table.ravel())
    sum_a = sum(comb(int(x), 2) for x in table.sum(axis=1))
    sum_b = sum(comb(int(x), 2) for x in table.sum(axis=0))
    total = comb(n, 2)
    expected = sum_a * sum_b / total if total else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # both partitions trivial (all-singletons or one block): identical up to labels
        return 1.0
    return (sum_cells - expected) / (max_index - expected)


def correct_classification_rate(truth, pred):
    """Best fraction of matches over one-to-one relabelings of ``pred``."""
    table, _, _ = classification_table(truth, pred)
    n = table.sum()
    if n == 0:
        raise ValueError("empty partitions")
    k = max(table.shape)
    square = np.zeros((k, k), dtype=int)
    square[: table.shape[0], : table.shape[1]] = table
    if k <= CCR_BRUTE_FORCE_MAX:
        cols = np.arange(k)
        best = max(square[perm, cols].sum() for perm in permutations(range(k)))
    else:
        rows, cols = linear_sum_assignment(-square)
        best = square[rows, cols].sum()
    return float(best / n)
