"""Single- and multiple-subsampled SLC / ASLC variants.

Random streams
--------------
All randomness comes from a ``numpy.random.Generator`` backed by the
counter-based Philox bit generator. A call that needs B subsamples draws a
(B, m) block of uniforms from the generator it is given; row b yields
subsample b as the indices of its s smallest keys. A single-subsample call
is exactly the B = 1 case, so ``multi_subsample`` with B = 1 and
``slc_plus`` agree when handed generators in the same state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .procedures import (
    ConfigError,
    LevelLike,
    RejectionResult,
    _check_s0,
    _positive_part,
    max_argmin,
    parse_level,
    storey_pi0,
    top_k_result,
)
from .pvalues import PValueVector, ScoreSample, conformal_p_values

RngLike = Union[np.random.Generator, int, None]


def make_rng(seed: int | np.random.SeedSequence | None = None) -> np.random.Generator:
    """Philox-backed generator; the same seed always gives the same stream."""
    return np.random.Generator(np.random.Philox(seed))


def _resolve_rng(rng: RngLike, fallback_seed: int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(fallback_seed if rng is None else rng)


def recommended_subsample_size(
    n: int,
    m: int,
    alpha: LevelLike,
    rho: Fraction | str | float = Fraction(1, 5),
    s_min: int = 100,
) -> int:
    """s = max(s_min, min(m, floor(rho * alpha * (n+1)))), clamped to [1, m]."""
    if n < 1 or m < 1:
        raise ConfigError("n and m must be >= 1")
    a = parse_level(alpha)
    rho = Fraction(rho) if not isinstance(rho, float) else Fraction(repr(rho))
    s = max(int(s_min), min(m, math.floor(rho * a * (n + 1))))
    return min(max(s, 1), m)


@dataclass(frozen=True)
class SubsampleSpec:
    """Tuning of the subsampled procedures.

    ``s=None`` means: use :func:`recommended_subsample_size` with ``rho`` and
    ``s_min``. ``B`` is only used by the multiple-subsample variants.
    """

    s: int | None = None
    B: int = 51
    gamma: Fraction = Fraction(1, 2)
    halve: bool = False
    rho: Fraction = Fraction(1, 5)
    s_min: int = 100
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        object.__setattr__(self, "rho", Fraction(self.rho))
        if self.B < 1:
            raise ConfigError(f"B must be >= 1, got {self.B}")
        if not 0 < self.gamma <= 1:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.s is not None and self.s < 1:
            raise ConfigError(f"subsample size must be >= 1, got {self.s}")
        if self.rho <= 0:
            raise ConfigError("rho must be positive")

    def size(self, n: int, m: int, alpha: LevelLike) -> int:
        if self.s is None:
            return recommended_subsample_size(n, m, alpha, self.rho, self.s_min)
        if self.s > m:
            raise ConfigError(f"subsample size {self.s} exceeds m = {m}")
        return self.s


def _as_pv(data: ScoreSample | PValueVector) -> PValueVector:
    return data if isinstance(data, PValueVector) else conformal_p_values(data)


def draw_subsamples(rng: np.random.Generator, m: int, s: int, B: int) -> np.ndarray:
    """(B, s) array of test indices, each row a uniform s-subset of range(m)."""
    keys = rng.random((B, m))
    if s == m:
        return np.argsort(keys, axis=1)
    return np.argpartition(keys, s - 1, axis=1)[:, :s]


def _subsample_counts(
    pv: PValueVector,
    level: Fraction,
    s: int,
    subsamples: np.ndarray,
    variant: str,
    s0: int | None,
):
    """Full-sample rejection counts r_b for each subsample row.

    Returns (r, slope, pi0_hat).
    """
    inv = np.empty(pv.m, dtype=np.int64)
    inv[pv.sigma] = np.arange(pv.m)
    # positions in the global decreasing-score order; sorting them orders
    # each subsample by decreasing score
    pos = np.sort(inv[subsamples], axis=1)
    ranks = pv.sorted_ranks[pos]
    grid = Fraction(1, pv.n + 1)
    if variant == "slc":
        pi0 = None
        slope = _positive_part(level / s - grid)
        cap = None
    elif variant == "aslc":
        s0 = _check_s0(s0, pv.n)
        pi0 = storey_pi0(pv, s0)
        slope = _positive_part(level / (pi0 * s) - grid)
        cap = np.count_nonzero(ranks <= s0, axis=1)
    else:
        raise ConfigError(f"unknown subsampling variant {variant!r}")
    if slope == 0:
        return np.zeros(len(pos), dtype=np.int64), slope, pi0
    k_hat = max_argmin(ranks, pv.n, slope, n_admissible=cap)
    rows = np.arange(len(pos))
    r = np.where(k_hat > 0, pos[rows, np.maximum(k_hat - 1, 0)] + 1, 0)
    return r.astype(np.int64), slope, pi0


def _single(
    data, alpha, spec, rng, variant, s0, subsample, name
) -> RejectionResult:
    pv = _as_pv(data)
    a = parse_level(alpha)
    level = a / 2 if spec.halve else a
    if subsample is not None:
        sub = np.asarray(subsample, dtype=np.int64).reshape(1, -1)
        if len(set(sub[0].tolist())) != sub.shape[1] or sub.min() < 0 or sub.max() >= pv.m:
            raise ConfigError("subsample must hold distinct test indices")
        s = sub.shape[1]
    else:
        s = spec.size(pv.n, pv.m, a)
        sub = draw_subsamples(_resolve_rng(rng, spec.seed), pv.m, s, 1)
    r, slope, pi0 = _subsample_counts(pv, level, s, sub, variant, s0)
    res = top_k_result(pv, int(r[0]), name, slope * s, pi0)
    return res


def slc_plus(
    data: ScoreSample | PValueVector,
    alpha: LevelLike,
    spec: SubsampleSpec = SubsampleSpec(),
    rng: RngLike = None,
    subsample=None,
) -> RejectionResult:
    """SLC run on one random subsample of size s, threshold applied to all tests.

    Calibration is not subsampled: the p-values are the full-calibration
    ones restricted to the subsample. ``subsample`` fixes the drawn index
    set explicitly (useful for replay and testing).
    """
    return _single(data, alpha, spec, rng, "slc", None, subsample, "slc+")


def aslc_plus(
    data: ScoreSample | PValueVector,
    alpha: LevelLike,
    s0: int | None = None,
    spec: SubsampleSpec = SubsampleSpec(),
    rng: RngLike = None,
    subsample=None,
) -> RejectionResult:
    """ASLC on one subsample; pi0_hat is estimated on the whole test sample."""
    return _single(data, alpha, spec, rng, "aslc", s0, subsample, "aslc+")


def select_count(r, gamma: Fraction = Fraction(1, 2)) -> tuple[int, int]:
    """(r_(ceil(gamma B)), b_hat) for counts ordered r_(1) >= ... >= r_(B).

    b_hat is the smallest b attaining the selected count; only the count
    matters for the rejection set.
    """
    r = np.asarray(r)
    j = math.ceil(Fraction(gamma) * r.size)
    target = int(np.sort(r)[::-1][j - 1])
    return target, int(np.nonzero(r == target)[0][0])


def multi_subsample(
    data: ScoreSample | PValueVector,
    alpha: LevelLike,
    spec: SubsampleSpec = SubsampleSpec(),
    variant: str = "slc",
    s0: int | None = None,
    rng: RngLike = None,
) -> RejectionResult:
    """Aggregate B single-subsample runs by an order statistic of their counts.

    With r_(1) >= ... >= r_(B) the sorted full-sample counts, the final
    count is r_(ceil(gamma * B)) (gamma = 1/2: the median) and the top
    that-many test points are rejected.
    """
    pv = _as_pv(data)
    a = parse_level(alpha)
    level = a / 2 if spec.halve else a
    s = spec.size(pv.n, pv.m, a)
    subs = draw_subsamples(_resolve_rng(rng, spec.seed), pv.m, s, spec.B)
    r, slope, pi0 = _subsample_counts(pv, level, s, subs, variant, s0)
    r_final, _ = select_count(r, spec.gamma)
    name = variant + "++" + ("/2" if spec.halve else "")
    return top_k_result(pv, r_final, name, slope * s, pi0)


def subsample_counts(
    data: ScoreSample | PValueVector,
    alpha: LevelLike,
    spec: SubsampleSpec = SubsampleSpec(),
    variant: str = "slc",
    s0: int | None = None,
    rng: RngLike = None,
) -> tuple[np.ndarray, int]:
    """The per-subsample counts r_b and the index b_hat reported for the aggregate.

    b_hat is the smallest b whose count equals the selected order statistic.
    """
    pv = _as_pv(data)
    a = parse_level(alpha)
    level = a / 2 if spec.halve else a
    s = spec.size(pv.n, pv.m, a)
    subs = draw_subsamples(_resolve_rng(rng, spec.seed), pv.m, s, spec.B)
    r, _, _ = _subsample_counts(pv, level, s, subs, variant, s0)
    return r, select_count(r, spec.gamma)[1]
