"""Conformal p-values on the rank grid l/(n+1).

P-values are kept as integer ranks so that every downstream comparison
can be done exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

TIE_POLICIES = ("break_by_index", "reject_input")


class TiesError(ValueError):
    """Raised in strict mode when the pooled scores contain ties."""


class InvalidScore(ValueError):
    """Raised on NaN/inf scores or empty score lists."""


def _as_scores(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidScore(f"{name} scores must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidScore(f"{name} scores contain NaN or infinite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScoreSample:
    """Calibration scores (all nulls) and test scores; larger means more novel."""

    calib: np.ndarray
    test: np.ndarray
    tie_policy: str = "break_by_index"

    def __post_init__(self):
        if self.tie_policy not in TIE_POLICIES:
            raise ValueError(f"unknown tie_policy {self.tie_policy!r}")
        object.__setattr__(self, "calib", _as_scores(self.calib, "calibration"))
        object.__setattr__(self, "test", _as_scores(self.test, "test"))

    @property
    def n(self) -> int:
        return int(self.calib.size)

    @property
    def m(self) -> int:
        return int(self.test.size)

    def has_ties(self) -> bool:
        pooled = np.concatenate([self.calib, self.test])
        return np.unique(pooled).size < pooled.size


@dataclass(frozen=True)
class Labels:
    """Novelty indicators h_i (1 = novelty, 0 = null) for the test points."""

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h).ravel()
        if not ((h == 0) | (h == 1)).all():
            raise ValueError("labels must be 0/1")
        h = h.astype(np.int8)
        h.flags.writeable = False
        object.__setattr__(self, "h", h)

    @property
    def m(self) -> int:
        return int(self.h.size)

    @property
    def m0(self) -> int:
        return int(self.m - self.h.sum())

    @property
    def m1(self) -> int:
        return int(self.h.sum())

    @property
    def pi0(self) -> Fraction:
        return Fraction(self.m0, self.m)


@dataclass(frozen=True)
class PValueVector:
    """Conformal p-values p_i = ranks[i] / (n + 1).

    ``sigma`` is 0-based: ``sigma[0]`` is the test index with the largest
    score. ``test_scores`` is carried along so procedures can report the
    score threshold of their rejection set.
    """

    ranks: np.ndarray
    sigma: np.ndarray
    n: int
    m: int
    test_scores: np.ndarray | None = None
    ties_broken: bool = False
    _sorted: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ranks = np.asarray(self.ranks, dtype=np.int64)
        sigma = np.asarray(self.sigma, dtype=np.int64)
        if ranks.shape != (self.m,) or sigma.shape != (self.m,):
            raise ValueError("ranks and sigma must have length m")
        for a in (ranks, sigma):
            a.flags.writeable = False
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "sigma", sigma)
        srt = ranks[sigma]
        srt.flags.writeable = False
        object.__setattr__(self, "_sorted", srt)

    @property
    def sorted_ranks(self) -> np.ndarray:
        """Ranks along sigma: l_{sigma(1)} <= ... <= l_{sigma(m)}."""
        return self._sorted

    def p_values(self) -> list[Fraction]:
        return [Fraction(int(r), self.n + 1) for r in self.ranks]

    def p_sorted(self) -> list[Fraction]:
        return [Fraction(int(r), self.n + 1) for r in self._sorted]


def conformal_p_values(sample: ScoreSample) -> PValueVector:
    """Rank-based p-values: rank_i = 1 + #{j : calib_j >= test_i}.

    Runs in O((n + m) log(n + m)). Test scores are ordered decreasingly;
    equal test scores keep their original index order.
    """
    ties = sample.has_ties()
    if ties and sample.tie_policy == "reject_input":
        raise TiesError("pooled calibration/test scores contain ties")
    calib = np.sort(sample.calib)
    # count of calib >= x is n minus count of calib < x
    below = np.searchsorted(calib, sample.test, side="left")
    ranks = 1 + (sample.n - below)
    sigma = np.argsort(-sample.test, kind="stable")
    return PValueVector(
        ranks=ranks,
        sigma=sigma,
        n=sample.n,
        m=sample.m,
        test_scores=sample.test,
        ties_broken=bool(ties),
    )


def shifted_p_values(pv: PValueVector) -> list[Fraction]:
    """p~_(k) = p_{sigma(k)} + k/(n+1) for k = 0..m, with p~_(0) = 0."""
    out = [Fraction(0)]
    for k, r in enumerate(pv.sorted_ranks, start=1):
        out.append(Fraction(int(r) + k, pv.n + 1))
    return out


def shifted_ranks(pv: PValueVector) -> np.ndarray:
    """Integer numerators of the shifted p-values, (n+1) * p~_(k), k = 0..m."""
    t = np.zeros(pv.m + 1, dtype=np.int64)
    t[1:] = pv.sorted_ranks + np.arange(1, pv.m + 1)
    return t
