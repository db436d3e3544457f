import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rnnclust import metrics
from rnnclust.exceptions import BaseTooSmall, ConstantSequence, LengthMismatch

from oracles import entropy_ambiguity


def expand(table):
    """Records (states, labels) realising a contingency table."""
    states, labels = [], []
    for k, row in enumerate(table):
        for q, c in enumerate(row):
            states += [q] * int(c)
            labels += [k] * int(c)
    return np.array(states), np.array(labels)


def test_worked_single_cluster():
    s, l = expand([[3, 1]])
    rec = metrics.ambiguity(s, l, 2)
    want = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))
    assert rec.per_cluster_amb[0] == pytest.approx(want, abs=1e-15)
    assert round(rec.amb, 4) == 0.8113


def test_worked_two_clusters():
    s, l = expand([[4, 0], [1, 1]])
    rec = metrics.ambiguity(s, l, 2)
    assert rec.per_cluster_amb == {0: 0.0, 1: 1.0}
    assert rec.amb == 0.5
    assert rec.wamb == pytest.approx(1 / 3, abs=1e-15)
    assert not rec.perfect


def test_extremes():
    s, l = expand([[2, 2, 2], [0, 5, 0]])
    rec = metrics.ambiguity(s, l, 3)
    assert rec.per_cluster_amb[0] == pytest.approx(1.0)
    assert rec.per_cluster_amb[1] == 0.0


def test_base_is_ground_truth_size():
    # state 2 never appears but still sets the log base
    s, l = expand([[1, 1, 0]])
    assert metrics.ambiguity(s, l, 3).amb == pytest.approx(math.log(2) / math.log(3))


def test_oracle_on_random_tables():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        K, Q = int(rng.integers(1, 8)), int(rng.integers(2, 7))
        table = rng.integers(0, 6, size=(K, Q)) * (rng.random((K, Q)) < 0.6)
        table = table[table.sum(1) > 0]
        if not len(table):
            continue
        s, l = expand(table)
        rec = metrics.ambiguity(s, l, Q)
        per, amb, wamb = entropy_ambiguity(table, Q)
        assert np.allclose(list(rec.per_cluster_amb.values()), per, atol=1e-12, rtol=0)
        assert abs(rec.amb - amb) < 1e-12 and abs(rec.wamb - wamb) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 4)), min_size=1, max_size=60),
       st.integers(0, 1000))
def test_properties(records, seed):
    s = np.array([q for q, _ in records])
    l = np.array([k for _, k in records])
    rec = metrics.ambiguity(s, l, 4)
    assert 0 <= rec.amb <= 1 and 0 <= rec.wamb <= 1
    assert rec.wamb <= max(rec.per_cluster_amb.values()) + 1e-12
    assert rec.perfect == metrics.is_optimal(l, s) == (rec.wamb == 0)
    # relabelling clusters changes nothing
    perm = np.random.default_rng(seed).permutation(5)
    rec2 = metrics.ambiguity(s, perm[l], 4)
    assert rec2.amb == pytest.approx(rec.amb) and rec2.wamb == pytest.approx(rec.wamb)
    # splitting clusters never raises wamb
    split = l * 2 + np.random.default_rng(seed).integers(0, 2, size=len(l))
    assert metrics.ambiguity(s, split, 4).wamb <= rec.wamb + 1e-12


def test_is_optimal():
    s = np.array([0, 1, 2, 1])
    assert metrics.is_optimal(s, s)
    assert metrics.is_optimal(np.array([0, 1, 2, 3]), s)  # non-injective renaming allowed
    assert not metrics.is_optimal(np.array([0, 0, 1, 1]), s)


def test_errors():
    with pytest.raises(BaseTooSmall):
        metrics.ambiguity([0, 0], [0, 1], 1)
    with pytest.raises(LengthMismatch):
        metrics.ambiguity([0, 1], [0], 2)


def test_spearman():
    assert metrics.spearman([1, 2, 3, 4], [2, 4, 6, 8]) == pytest.approx(1.0)
    assert metrics.spearman([1, 2, 3, 4], [8, 6, 4, 2]) == pytest.approx(-1.0)
    assert metrics.spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)
    with pytest.raises(LengthMismatch):
        metrics.spearman([1, 2], [1, 2])
    with pytest.raises(ConstantSequence):
        metrics.spearman([1, 2, 3], [5, 5, 5])
