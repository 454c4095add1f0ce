"""Support-line procedures (and BH) on conformal p-values.

Every objective of the form ``p_{sigma(k)} - k * slope`` is evaluated on
integers: p-values are ``l / (n+1)`` and the slope is an exact
``Fraction``, so the max-of-argmin rule never depends on rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Union

import numpy as np

from .pvalues import PValueVector

LevelLike = Union[str, int, float, Fraction, Decimal]

_INT64_SAFE = 2**62


class ConfigError(ValueError):
    """Invalid tuning parameter (level, s0, subsample size, ...)."""


def parse_level(alpha: LevelLike) -> Fraction:
    """Parse a level in (0, 1) into an exact fraction.

    Strings and floats are read through their decimal representation, so
    ``0.1`` becomes ``1/10`` rather than the nearest binary double. Strings
    of the form ``"a/b"`` are accepted too.
    """
    if isinstance(alpha, Fraction):
        value = alpha
    elif isinstance(alpha, float):
        if not math.isfinite(alpha):
            raise ConfigError(f"level must be finite, got {alpha!r}")
        value = Fraction(repr(alpha))
    elif isinstance(alpha, Decimal):
        if not alpha.is_finite():
            raise ConfigError(f"level must be finite, got {alpha!r}")
        value = Fraction(alpha)
    else:
        try:
            value = Fraction(str(alpha).strip())
        except (ValueError, TypeError, ZeroDivisionError):
            raise ConfigError(f"cannot parse level {alpha!r}") from None
    if not 0 < value < 1:
        raise ConfigError(f"level must lie in (0, 1), got {alpha!r}")
    return value


def default_s0(n: int) -> int:
    """Storey parameter putting the threshold (s0+1)/(n+1) near 1/2."""
    return max(0, (n + 1) // 2 - 1)


def _check_s0(s0: int | None, n: int) -> int:
    if s0 is None:
        return default_s0(n)
    s0 = int(s0)
    if not 0 <= s0 <= n - 1:
        raise ConfigError(f"s0 must lie in [0, n-1] = [0, {n - 1}], got {s0}")
    return s0


@dataclass(frozen=True)
class RejectionResult:
    """A top-k set of the test sample.

    ``rejected`` holds sorted 0-based test indices; ``boundary_index`` is
    the last rejection sigma(k_hat) or None when nothing is rejected.
    """

    method: str
    k_hat: int
    rejected: tuple[int, ...]
    boundary_index: int | None
    threshold_score: float
    adjusted_level: Fraction
    pi0_hat: Fraction | None = None

    @property
    def n_rejected(self) -> int:
        return len(self.rejected)


def top_k_result(
    pv: PValueVector,
    k: int,
    method: str,
    adjusted_level: Fraction,
    pi0_hat: Fraction | None = None,
) -> RejectionResult:
    """Reject the k test points ranked first by sigma."""
    k = int(k)
    if k == 0:
        return RejectionResult(method, 0, (), None, math.inf, adjusted_level, pi0_hat)
    top = pv.sigma[:k]
    boundary = int(top[-1])
    thr = float(pv.test_scores[boundary]) if pv.test_scores is not None else math.nan
    return RejectionResult(
        method,
        k,
        tuple(sorted(int(i) for i in top)),
        boundary,
        thr,
        adjusted_level,
        pi0_hat,
    )


def _objective(ranks: np.ndarray, n: int, slope: Fraction) -> np.ndarray:
    """(n+1) * den * (p_{sigma(k)} - k * slope) for k = 0..s along the last axis.

    ``ranks`` has shape (..., s) and is nondecreasing along the last axis;
    the k = 0 column (p_{sigma(0)} = 0) is prepended.
    """
    c = slope * (n + 1)
    a, b = c.numerator, c.denominator
    s = ranks.shape[-1]
    lead = np.zeros(ranks.shape[:-1] + (1,), dtype=np.int64)
    full = np.concatenate([lead, ranks], axis=-1)
    ks = np.arange(s + 1)
    bound = max(int(full.max(initial=0)) * b, s * abs(a)) if s else 0
    if bound < _INT64_SAFE:
        return full * b - ks * a
    return full.astype(object) * b - ks.astype(object) * a


def max_argmin(
    ranks: np.ndarray, n: int, slope: Fraction, n_admissible=None
) -> np.ndarray | int:
    """k_hat = max argmin_{0 <= k <= K} (p_{sigma(k)} - k * slope).

    ``ranks`` is a nondecreasing rank vector (or a batch of them, one per
    row). ``n_admissible`` caps k at K (per row); k = 0 is always admissible.
    """
    ranks = np.asarray(ranks)
    batch = ranks.ndim == 2
    R = ranks if batch else ranks[None, :]
    obj = _objective(R, n, slope)
    s = R.shape[-1]
    if n_admissible is not None:
        K = np.broadcast_to(np.asarray(n_admissible), (R.shape[0],))
        mask = np.arange(s + 1)[None, :] > K[:, None]
        if mask.any():
            if obj.dtype == object:
                obj = obj.copy()
                obj[mask] = max(int(v) for v in obj.ravel()) + 1
            else:
                obj = np.where(mask, np.iinfo(np.int64).max, obj)
    mins = obj.min(axis=1)
    hit = obj == mins[:, None]
    # last index attaining the minimum
    k_hat = s - np.argmax(hit[:, ::-1], axis=1)
    k_hat = k_hat.astype(np.int64)
    return k_hat if batch else int(k_hat[0])


def _positive_part(x: Fraction) -> Fraction:
    return x if x > 0 else Fraction(0)


def bh(pv: PValueVector, alpha: LevelLike) -> RejectionResult:
    """Benjamini-Hochberg: k_hat = max{k : p_{sigma(k)} <= alpha k / m}."""
    a = parse_level(alpha)
    dtype = np.int64 if (pv.n + 1) * pv.m * a.denominator < _INT64_SAFE else object
    ks = np.arange(1, pv.m + 1).astype(dtype)
    lhs = pv.sorted_ranks.astype(dtype) * (pv.m * a.denominator)
    rhs = ks * (a.numerator * (pv.n + 1))
    ok = np.nonzero(lhs <= rhs)[0]
    k_hat = int(ok[-1]) + 1 if ok.size else 0
    return top_k_result(pv, k_hat, "bh", a)


def sl(pv: PValueVector, alpha: LevelLike) -> RejectionResult:
    """Support line: max argmin_k (p_{sigma(k)} - alpha k / m)."""
    a = parse_level(alpha)
    k_hat = max_argmin(pv.sorted_ranks, pv.n, a / pv.m)
    return top_k_result(pv, k_hat, "sl", a)


def slc(pv: PValueVector, alpha: LevelLike) -> RejectionResult:
    """Support line conformal: slope (alpha/m - 1/(n+1))_+ per rejection."""
    a = parse_level(alpha)
    slope = _positive_part(a / pv.m - Fraction(1, pv.n + 1))
    k_hat = max_argmin(pv.sorted_ranks, pv.n, slope) if slope > 0 else 0
    return top_k_result(pv, k_hat, "slc", slope * pv.m)


def storey_pi0(pv: PValueVector, s0: int | None = None) -> Fraction:
    """Storey-type null proportion estimate with threshold (s0+1)/(n+1).

    Not capped at 1.
    """
    s0 = _check_s0(s0, pv.n)
    count = int(np.count_nonzero(pv.ranks >= s0 + 1))
    return Fraction(1 + count, pv.m) / (1 - Fraction(s0 + 1, pv.n + 1))


def asl(pv: PValueVector, alpha: LevelLike, s0: int | None = None) -> RejectionResult:
    """Adaptive SL: slope alpha/(m pi0_hat), k restricted to p_{sigma(k)} <= s0/(n+1)."""
    a = parse_level(alpha)
    s0 = _check_s0(s0, pv.n)
    pi0 = storey_pi0(pv, s0)
    K = int(np.count_nonzero(pv.sorted_ranks <= s0))
    k_hat = max_argmin(pv.sorted_ranks, pv.n, a / (pv.m * pi0), n_admissible=K)
    return top_k_result(pv, k_hat, "asl", a / pi0, pi0)


def aslc(pv: PValueVector, alpha: LevelLike, s0: int | None = None) -> RejectionResult:
    """Adaptive SLC: slope (alpha/(m pi0_hat) - 1/(n+1))_+."""
    a = parse_level(alpha)
    s0 = _check_s0(s0, pv.n)
    pi0 = storey_pi0(pv, s0)
    slope = _positive_part(a / (pv.m * pi0) - Fraction(1, pv.n + 1))
    k_hat = max_argmin(pv.sorted_ranks, pv.n, slope) if slope > 0 else 0
    return top_k_result(pv, k_hat, "aslc", slope * pv.m, pi0)


def slg(pv: PValueVector, alpha: LevelLike) -> RejectionResult:
    """SL with gap: keep SL's rejections only if its minimum is isolated.

    The SL objective value at k_hat plus 1/(n+1) must not exceed the
    objective at every other k, otherwise nothing is rejected.
    """
    a = parse_level(alpha)
    slope = a / pv.m
    obj = _objective(pv.sorted_ranks[None, :], pv.n, slope)[0]
    k_hat = max_argmin(pv.sorted_ranks, pv.n, slope)
    if k_hat >= 1:
        # obj is scaled by (n+1) * b, so 1/(n+1) becomes b
        b = (slope * (pv.n + 1)).denominator
        others = np.delete(obj, k_hat)
        if not obj[k_hat] + b <= others.min():
            k_hat = 0
    return top_k_result(pv, k_hat, "slg", a)


PROCEDURES = {
    "bh": bh,
    "sl": sl,
    "slc": slc,
    "asl": asl,
    "aslc": aslc,
    "slg": slg,
}
