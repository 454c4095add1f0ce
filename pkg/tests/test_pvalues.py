from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conformal_bfdr import (
    InvalidScore,
    Labels,
    ScoreSample,
    TiesError,
    conformal_p_values,
    shifted_p_values,
)
from conftest import distinct_scores, tied_scores
from oracles import naive_ranks, naive_sigma


def test_toy_instance():
    pv = conformal_p_values(ScoreSample([0.1, 0.2, 0.3, 0.4], [0.5, 0.35, 0.15]))
    assert pv.ranks.tolist() == naive_ranks([0.1, 0.2, 0.3, 0.4], [0.5, 0.35, 0.15]) == [1, 2, 4]
    assert pv.p_values() == [Fraction(1, 5), Fraction(2, 5), Fraction(4, 5)]
    assert pv.sigma.tolist() == [0, 1, 2]


def test_extreme_scores():
    calib = [0.3, 0.1, 0.7, 0.5]
    pv = conformal_p_values(ScoreSample(calib, [9.0, -9.0]))
    assert pv.p_values() == [Fraction(1, 5), Fraction(1)]


@given(distinct_scores())
def test_ranks_match_naive_count(data):
    calib, test = data
    pv = conformal_p_values(ScoreSample(calib, test, "reject_input"))
    assert pv.ranks.tolist() == naive_ranks(calib, test)
    assert pv.sigma.tolist() == naive_sigma(test)


@given(tied_scores())
def test_ties_broken_by_index(data):
    calib, test = data
    pv = conformal_p_values(ScoreSample(calib, test))
    assert pv.ranks.tolist() == naive_ranks(calib, test)
    assert pv.sigma.tolist() == naive_sigma(test)
    pooled = calib + test
    assert pv.ties_broken == (len(set(pooled)) < len(pooled))


def test_exact_against_naive_on_random_instances(rng):
    for _ in range(1000):
        n, m = rng.integers(1, 21, size=2)
        calib = rng.normal(size=n).tolist()
        test = rng.normal(size=m).tolist()
        pv = conformal_p_values(ScoreSample(calib, test))
        assert pv.ranks.tolist() == naive_ranks(calib, test)


@given(tied_scores())
def test_sorted_ranks_nondecreasing_and_order_consistent(data):
    calib, test = data
    pv = conformal_p_values(ScoreSample(calib, test))
    assert np.all(np.diff(pv.sorted_ranks) >= 0)
    for i in range(len(test)):
        for j in range(len(test)):
            if test[i] > test[j]:
                assert pv.ranks[i] <= pv.ranks[j]


@given(tied_scores())
def test_shifted_strictly_increasing(data):
    pv = conformal_p_values(ScoreSample(*data))
    pt = shifted_p_values(pv)
    assert pt[0] == 0
    assert len(pt) == pv.m + 1
    assert all(a < b for a, b in zip(pt, pt[1:]))


def test_shifted_values():
    pv = conformal_p_values(ScoreSample([0.1, 0.2, 0.3, 0.4], [0.5, 0.35, 0.15]))
    assert shifted_p_values(pv) == [0, Fraction(2, 5), Fraction(4, 5), Fraction(7, 5)]
    pv1 = conformal_p_values(ScoreSample([0.1, 0.2, 0.3], [5.0]))
    assert shifted_p_values(pv1) == [0, Fraction(2, 4)]


def test_strict_mode_rejects_ties():
    with pytest.raises(TiesError):
        conformal_p_values(ScoreSample([0.1, 0.2], [0.2], "reject_input"))
    pv = conformal_p_values(ScoreSample([0.1, 0.2], [0.2]))
    assert pv.ties_broken and pv.ranks.tolist() == [2]


@pytest.mark.parametrize("bad", [[float("nan")], [float("inf")], []])
def test_invalid_scores(bad):
    with pytest.raises(InvalidScore):
        ScoreSample([0.1], bad)
    with pytest.raises(InvalidScore):
        ScoreSample(bad, [0.1])


def test_labels():
    lab = Labels([0, 0, 1, 0])
    assert (lab.m, lab.m0, lab.m1, lab.pi0) == (4, 3, 1, Fraction(3, 4))
    with pytest.raises(ValueError):
        Labels([0, 2])


def test_super_uniformity(rng):
    # all-null test points: P(p_i <= t) <= t on the grid
    n, m, T = 9, 3, 10_000
    ranks = np.empty((T, m), dtype=np.int64)
    for t in range(T):
        pv = conformal_p_values(ScoreSample(rng.random(n), rng.random(m)))
        ranks[t] = pv.ranks
    for ell in range(1, n + 2):
        hit = ranks <= ell
        for i in range(m):
            est = hit[:, i].mean()
            se = hit[:, i].std(ddof=1) / np.sqrt(T)
            assert est <= ell / (n + 1) + 3 * se
