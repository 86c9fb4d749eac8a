import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_rand_score

from msnfa.selection import (
    adjusted_rand_index,
    classification_table,
    correct_classification_rate,
    criteria,
    entropy,
)

labels = st.integers(2, 60).flatmap(
    lambda n: st.tuples(
        arrays(np.int64, n, elements=st.integers(0, 4)), arrays(np.int64, n, elements=st.integers(0, 4))
    )
)


@given(labels)
def test_ari_matches_sklearn(ab):
    a, b = ab
    assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_score(a, b), abs=1e-12)


@given(labels, st.permutations(range(5)))
def test_metrics_invariant_to_relabeling(ab, perm):
    a, b = ab
    relabeled = np.asarray(perm)[b]
    assert adjusted_rand_index(a, relabeled) == pytest.approx(adjusted_rand_index(a, b))
    assert correct_classification_rate(a, relabeled) == pytest.approx(correct_classification_rate(a, b))


@given(arrays(np.int64, st.integers(2, 50), elements=st.integers(0, 6)), st.permutations(range(7)))
def test_identical_partitions_score_one(a, perm):
    b = np.asarray(perm)[a]
    assert adjusted_rand_index(a, b) == pytest.approx(1.0)
    assert correct_classification_rate(a, b) == 1.0


@given(labels)
def test_ccr_brute_force_equals_assignment(ab):
    a, b = ab
    table, _, _ = classification_table(a, b)
    r, c = linear_sum_assignment(-table)
    assert correct_classification_rate(a, b) == pytest.approx(table[r, c].sum() / a.size)


def test_ccr_large_k_uses_assignment(rng):
    a = rng.integers(12, size=400)
    b = (a + 3) % 12
    b[:40] = rng.integers(12, size=40)
    ccr = correct_classification_rate(a, b)
    assert 0.9 <= ccr <= 1.0


def test_known_values():
    a = [0, 0, 0, 1, 1, 1]
    b = [0, 0, 1, 1, 2, 2]
    assert correct_classification_rate(a, b) == pytest.approx(4 / 6)
    assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_score(a, b))
    table, tl, pl = classification_table(a, b)
    assert table.tolist() == [[2, 1, 0], [0, 1, 2]]
    assert list(tl) == [0, 1] and list(pl) == [0, 1, 2]


def test_string_labels():
    a = ["B", "M", "B", "M"]
    b = ["x", "y", "x", "y"]
    assert adjusted_rand_index(a, b) == 1.0
    assert correct_classification_rate(a, b) == 1.0


def test_entropy_and_criteria_relations(rng):
    z = rng.dirichlet(np.ones(3), size=50).T
    row = criteria(-123.4, 17, 50, z, q=2, family="msnfa")
    assert row.ent == pytest.approx(entropy(z))
    assert row.bic == pytest.approx(-123.4 - 8.5 * np.log(50))
    assert row.icl == row.bic - row.ent
    assert row.awe == pytest.approx(row.icl - 17 * (1.5 + np.log(50)))
    assert row.g == 3 and row.as_dict()["family"] == "msnfa"


def test_hard_assignments_have_zero_entropy():
    z = np.eye(2)[:, [0, 1, 1, 0]]
    assert entropy(z) == 0.0
    row = criteria(0.0, 1, 4, z)
    assert row.icl == row.bic


def test_criteria_validation():
    with pytest.raises(ValueError):
        criteria(0.0, 1, 3, np.array([[0.5, 0.5, 0.7], [0.5, 0.5, 0.5]]))
    with pytest.raises(ValueError):
        criteria(0.0, 1, 1, np.ones((1, 1)))
    with pytest.raises(ValueError):
        criteria(0.0, 1, 3, np.ones((1, 2)))
    with pytest.raises(ValueError):
        classification_table([0, 1], [0])
