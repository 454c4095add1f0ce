"""Local fdr estimates on the shifted conformal p-values.

Work is done on the integer numerators ``t_k = (n+1) * p~_(k)``; values are
turned into ``Fraction`` only on output.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .procedures import ConfigError, LevelLike, parse_level
from .pvalues import PValueVector, shifted_p_values, shifted_ranks


class PreconditionError(ConfigError):
    """alpha/m > 1/(n+1) is required for the lfdr representations of SLC."""


def pava(y: Sequence) -> list[Fraction]:
    """Least-squares nondecreasing fit with unit weights (pool adjacent violators).

    Inputs must be ints or Fractions; the fit is exact.
    """
    sums: list = []
    counts: list[int] = []
    for v in y:
        sums.append(v)
        counts.append(1)
        # merge while the previous block mean exceeds the last one
        while len(sums) > 1 and sums[-2] * counts[-1] > sums[-1] * counts[-2]:
            s, c = sums.pop(), counts.pop()
            sums[-1] += s
            counts[-1] += c
    out: list[Fraction] = []
    for s, c in zip(sums, counts):
        out.extend([Fraction(s) / c] * c)
    return out


def lfdr_raw(pv: PValueVector) -> list[Fraction]:
    """m * (p~_(k) - p~_(k-1)) for k = 1..m."""
    t = shifted_ranks(pv)
    return [Fraction(pv.m * int(d), pv.n + 1) for d in t[1:] - t[:-1]]


def _iso_steps(pv: PValueVector) -> list[Fraction]:
    t = shifted_ranks(pv)
    return pava([int(d) for d in t[1:] - t[:-1]])


def lfdr_iso(pv: PValueVector) -> list[Fraction]:
    """m times the left slopes of the GCM of {(k/m, p~_(k))}, k = 1..m."""
    return [pv.m * d / (pv.n + 1) for d in _iso_steps(pv)]


def gcm_values(pv: PValueVector) -> list[Fraction]:
    """The greatest convex minorant of k -> p~_(k) evaluated at k = 0..m."""
    out = [Fraction(0)]
    for d in _iso_steps(pv):
        out.append(out[-1] + d / (pv.n + 1))
    return out


def _upper_hull(xs: Sequence[int], ys: Sequence[int]) -> list[int]:
    """Indices of the vertices of the least concave majorant (x increasing)."""
    hull: list[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or below the chord a -> i
            cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def grenander_pmf(pv: PValueVector) -> dict[Fraction, Fraction]:
    """Nonincreasing pmf on {1/(n+1), ..., (m+n+1)/(n+1)} maximising the
    likelihood of the shifted p-values.

    Masses are the left slopes of the LCM of the empirical cdf of the
    shifted p-values, scaled by the grid step 1/(n+1).
    """
    t = shifted_ranks(pv)[1:]
    N = pv.m + pv.n + 1
    counts = [0] * (N + 1)
    j = 0
    for u in range(N + 1):
        while j < pv.m and t[j] <= u:
            j += 1
        counts[u] = j
    xs = list(range(N + 1))
    hull = _upper_hull(xs, counts)
    pmf: dict[Fraction, Fraction] = {}
    for a, b in zip(hull[:-1], hull[1:]):
        mass = Fraction(counts[b] - counts[a], pv.m * (b - a))
        for u in range(a + 1, b + 1):
            pmf[Fraction(u, pv.n + 1)] = mass
    return pmf


def lfdr_grenander(pv: PValueVector) -> tuple[list[Fraction], dict[Fraction, Fraction]]:
    """(1/(n+1)) / g_hat(p~_(k)) for k = 1..m, together with g_hat."""
    pmf = grenander_pmf(pv)
    step = Fraction(1, pv.n + 1)
    values = [step / pmf[p] for p in shifted_p_values(pv)[1:]]
    return values, pmf


def _check_precondition(pv: PValueVector, a: Fraction) -> None:
    if not a / pv.m > Fraction(1, pv.n + 1):
        raise PreconditionError(
            f"alpha/m = {a / pv.m} does not exceed 1/(n+1) = {Fraction(1, pv.n + 1)}"
        )


def slc_kmax_shifted(pv: PValueVector, alpha: LevelLike) -> int:
    """max argmin_k (p~_(k) - alpha k / m) by direct enumeration."""
    a = parse_level(alpha)
    _check_precondition(pv, a)
    t = shifted_ranks(pv)
    # scale by (n+1) * m * den
    best, k_best = None, 0
    for k, tk in enumerate(t):
        v = int(tk) * pv.m * a.denominator - k * a.numerator * (pv.n + 1)
        if best is None or v <= best:
            best, k_best = v, k
    return k_best


def slc_kmax_via_lfdr(pv: PValueVector, alpha: LevelLike, which: str = "iso") -> int:
    """Largest k in [0, m] with lfdr(k) <= alpha (k = 0 always qualifies)."""
    a = parse_level(alpha)
    _check_precondition(pv, a)
    if which == "iso":
        values = lfdr_iso(pv)
    elif which == "gren":
        values = lfdr_grenander(pv)[0]
    else:
        raise ConfigError(f"unknown lfdr estimator {which!r}")
    k_hat = 0
    for k, v in enumerate(values, start=1):
        if v <= a:
            k_hat = k
    return k_hat


@dataclass(frozen=True)
class LfdrCurve:
    p_sorted: list[Fraction]
    p_tilde: list[Fraction]
    lfdr_raw: list[Fraction]
    lfdr_iso: list[Fraction]
    lfdr_gren: list[Fraction]
    gcm: list[Fraction]
    grenander_pmf: dict[Fraction, Fraction]

    def rows(self):
        """One row per k = 0..m; the k = 0 row has no lfdr values."""
        yield (0, Fraction(0), self.p_tilde[0], None, None, None, self.gcm[0])
        for k in range(1, len(self.p_tilde)):
            yield (
                k,
                self.p_sorted[k - 1],
                self.p_tilde[k],
                self.lfdr_raw[k - 1],
                self.lfdr_iso[k - 1],
                self.lfdr_gren[k - 1],
                self.gcm[k],
            )


def lfdr_curve(pv: PValueVector) -> LfdrCurve:
    gren, pmf = lfdr_grenander(pv)
    return LfdrCurve(
        p_sorted=pv.p_sorted(),
        p_tilde=shifted_p_values(pv),
        lfdr_raw=lfdr_raw(pv),
        lfdr_iso=lfdr_iso(pv),
        lfdr_gren=gren,
        gcm=gcm_values(pv),
        grenander_pmf=pmf,
    )
