"""Synthetic score generators and Monte Carlo estimates of bFDR / FDR.

Every trial t draws its scores from the stream ``(seed, t, 0)`` and each
(method, alpha) cell draws its subsampling randomness from
``(seed, t, 1 + cell)``, so all cells see the same scores in a trial and
results do not depend on how trials are split across workers.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import procedures as proc
from .procedures import ConfigError, LevelLike, RejectionResult, parse_level
from .pvalues import Labels, PValueVector, ScoreSample, conformal_p_values
from .subsampling import SubsampleSpec, aslc_plus, make_rng, multi_subsample, slc_plus


class UnknownMethod(ConfigError):
    pass


METHODS = (
    "bh", "sl", "slc", "asl", "aslc", "slg",
    "slc+", "aslc+", "slc++", "aslc++", "slc++/2", "aslc++/2",
)


@dataclass(frozen=True)
class Dist:
    """Uniform(a, b) or Beta(a, b)."""

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in ("uniform", "beta"):
            raise ConfigError(f"unknown distribution {self.kind!r}")
        if self.kind == "uniform" and not self.a < self.b:
            raise ConfigError("uniform needs a < b")
        if self.kind == "beta" and not (self.a > 0 and self.b > 0):
            raise ConfigError("beta needs positive parameters")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size)
        return rng.beta(self.a, self.b, size)

    @classmethod
    def from_dict(cls, d: dict) -> "Dist":
        try:
            return cls(str(d["kind"]).lower(), float(d["a"]), float(d["b"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad distribution spec {d!r}") from exc

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class GeneratorSpec:
    """n calibration and m0 null test scores from ``null``, m - m0 from ``alt``."""

    null: Dist
    alt: Dist
    n: int
    m: int
    m0: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ConfigError("n and m must be >= 1")
        if not 0 <= self.m0 <= self.m:
            raise ConfigError(f"m0 must lie in [0, m], got m0={self.m0}, m={self.m}")

    @property
    def m1(self) -> int:
        return self.m - self.m0

    @property
    def pi0(self) -> Fraction:
        return Fraction(self.m0, self.m)


def setting_a(m: int = 2000, n: int = 4000, pi0: Fraction = Fraction(4, 5)) -> GeneratorSpec:
    """U(0,1) nulls, U(0.8,1.8) novelties."""
    return GeneratorSpec(Dist("uniform", 0, 1), Dist("uniform", 0.8, 1.8), n, m, round(pi0 * m))


def setting_b(m: int = 2000, n: int = 4000, pi0: Fraction = Fraction(4, 5)) -> GeneratorSpec:
    """U(0,1) nulls, Beta(30,1) novelties (same support)."""
    return GeneratorSpec(Dist("uniform", 0, 1), Dist("beta", 30, 1), n, m, round(pi0 * m))


def setting_c(m: int = 200, n: int = 12000, pi0: Fraction = Fraction(4, 5)) -> GeneratorSpec:
    return setting_a(m=m, n=n, pi0=pi0)


def counterexample(n: int = 9, m: int = 40, m1: int = 20) -> GeneratorSpec:
    """Novelties in (1, 2) sit above every null and calibration score."""
    return GeneratorSpec(Dist("uniform", 0, 1), Dist("uniform", 1, 2), n, m, m - m1)


def generate_trial(spec: GeneratorSpec, rng: np.random.Generator) -> tuple[ScoreSample, Labels]:
    calib = spec.null.sample(rng, spec.n)
    test = np.concatenate([spec.null.sample(rng, spec.m0), spec.alt.sample(rng, spec.m1)])
    h = np.concatenate([np.zeros(spec.m0, dtype=np.int8), np.ones(spec.m1, dtype=np.int8)])
    return ScoreSample(calib, test), Labels(h)


def evaluate_trial(result: RejectionResult, labels: Labels) -> tuple[float, bool, int]:
    """(FDP, whether the last rejection is a null, number of rejections)."""
    rej = np.asarray(result.rejected, dtype=np.int64)
    if rej.size == 0:
        return 0.0, False, 0
    false = int(rej.size - labels.h[rej].sum())
    boundary_null = result.k_hat >= 1 and labels.h[result.boundary_index] == 0
    return false / rej.size, bool(boundary_null), int(rej.size)


@dataclass(frozen=True)
class ProcedureSpec:
    """A method name plus its tuning parameters.

    Subsample size: ``s`` if given, else ``floor(subsample_fraction * m)`` if
    given, else the rule-of-thumb with ``rho`` and ``s_min``.
    """

    method: str
    s0: int | None = None
    s: int | None = None
    subsample_fraction: Fraction | None = None
    rho: Fraction = Fraction(1, 5)
    s_min: int = 100
    B: int = 51
    gamma: Fraction = Fraction(1, 2)
    label: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise UnknownMethod(f"unknown method {self.method!r}")
        if self.subsample_fraction is not None:
            f = Fraction(self.subsample_fraction)
            if not 0 < f <= 1:
                raise ConfigError("subsample_fraction must lie in (0, 1]")
            object.__setattr__(self, "subsample_fraction", f)
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        object.__setattr__(self, "rho", Fraction(self.rho))

    @property
    def name(self) -> str:
        return self.label or self.method

    @property
    def randomized(self) -> bool:
        return "+" in self.method

    @property
    def halve(self) -> bool:
        return self.method.endswith("/2")

    def subsample_spec(self, m: int) -> SubsampleSpec:
        s = self.s
        if s is None and self.subsample_fraction is not None:
            s = max(1, math.floor(self.subsample_fraction * m))
        return SubsampleSpec(
            s=s, B=self.B, gamma=self.gamma, halve=self.halve, rho=self.rho, s_min=self.s_min
        )

    def run(self, pv: PValueVector, alpha: LevelLike, rng=None) -> RejectionResult:
        meth = self.method
        if meth in ("bh", "sl", "slc", "slg"):
            return proc.PROCEDURES[meth](pv, alpha)
        if meth in ("asl", "aslc"):
            return proc.PROCEDURES[meth](pv, alpha, self.s0)
        spec = self.subsample_spec(pv.m)
        if meth == "slc+":
            return slc_plus(pv, alpha, spec, rng)
        if meth == "aslc+":
            return aslc_plus(pv, alpha, self.s0, spec, rng)
        variant = "aslc" if meth.startswith("aslc") else "slc"
        return multi_subsample(pv, alpha, spec, variant, self.s0, rng)

    @classmethod
    def from_config(cls, item) -> "ProcedureSpec":
        if isinstance(item, str):
            return cls(item.lower())
        if not isinstance(item, dict) or "method" not in item:
            raise ConfigError(f"bad method entry {item!r}")
        allowed = {"method", "s0", "s", "subsample_fraction", "rho", "s_min", "B", "gamma", "label"}
        extra = set(item) - allowed
        if extra:
            raise ConfigError(f"unknown method fields {sorted(extra)}")
        kw = dict(item)
        kw["method"] = str(kw["method"]).lower()
        for key in ("subsample_fraction", "rho", "gamma"):
            if key in kw and kw[key] is not None:
                kw[key] = Fraction(str(kw[key]))
        return cls(**kw)


def theoretical_bounds(
    spec: GeneratorSpec, method: str | ProcedureSpec, alpha: LevelLike
) -> float:
    """Distribution-free bFDR bound for a method at level alpha."""
    gamma = Fraction(1, 2)
    if isinstance(method, ProcedureSpec):
        gamma = method.gamma
        method = method.method
    a = parse_level(alpha)
    m0, m, n = spec.m0, spec.m, spec.n
    pi0 = Fraction(m0, m)
    if method == "sl":
        b = a * pi0 + Fraction(m0, n + 1)
    elif method == "slg":
        # the gap guarantee needs 1/(n+1) <= alpha/m; otherwise SLG's boundary
        # is SL's boundary or nothing, so the SL bound applies
        if Fraction(1, n + 1) <= a / m:
            b = a * pi0
        else:
            b = a * pi0 + Fraction(m0, n + 1)
    elif method in ("slc", "slc+"):
        b = a * pi0
    elif method == "asl":
        b = a + Fraction(m0, n + 1)
    elif method in ("aslc", "aslc+"):
        b = a
    elif method in ("slc++", "slc++/2", "aslc++", "aslc++/2"):
        level = a / 2 if method.endswith("/2") else a
        b = level / gamma
        if method.startswith("slc"):
            b *= pi0
    else:
        raise UnknownMethod(f"no bFDR bound for method {method!r}")
    return float(b)


@dataclass(frozen=True)
class SummaryRow:
    method: str
    alpha: Fraction
    trials: int
    bfdr: float
    bfdr_se: float
    fdr: float
    fdr_se: float
    mean_rej_frac: float
    sd_rej_frac: float
    mean_pi0_hat: float | None
    bound: float | None


CSV_COLUMNS = (
    "method", "alpha", "trials", "bfdr", "bfdr_se", "fdr", "fdr_se",
    "mean_rej_frac", "sd_rej_frac", "bound",
)


@dataclass
class SimulationSummary:
    rows: list[SummaryRow] = field(default_factory=list)

    def get(self, method: str, alpha: LevelLike) -> SummaryRow:
        a = parse_level(alpha)
        for r in self.rows:
            if r.method == method and r.alpha == a:
                return r
        raise KeyError((method, alpha))

    def to_csv(self, fh=None) -> str | None:
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.method, _fmt_level(r.alpha), r.trials,
                repr(r.bfdr), repr(r.bfdr_se), repr(r.fdr), repr(r.fdr_se),
                repr(r.mean_rej_frac), repr(r.sd_rej_frac),
                "" if r.bound is None else repr(r.bound),
            ])
        return buf.getvalue() if fh is None else None


def _fmt_level(a: Fraction) -> str:
    """Decimal text when the fraction terminates, else ``num/den``."""
    d = a.denominator
    for f in (2, 5):
        while d % f == 0:
            d //= f
    if d != 1:
        return str(a)
    return format(Decimal(a.numerator) / Decimal(a.denominator), "f")


def _stream(seed: int, *key: int) -> np.random.Generator:
    return make_rng(np.random.SeedSequence(seed, spawn_key=key))


def _trial_block(args):
    spec, methods, alphas, seed, trials = args
    cells = len(methods) * len(alphas)
    T = len(trials)
    bnull = np.zeros((cells, T), dtype=bool)
    fdp = np.zeros((cells, T))
    nrej = np.zeros((cells, T), dtype=np.int64)
    pi0 = np.full((cells, T), np.nan)
    for j, t in enumerate(trials):
        sample, labels = generate_trial(spec, _stream(seed, t, 0))
        pv = conformal_p_values(sample)
        c = 0
        for meth in methods:
            for a in alphas:
                rng = _stream(seed, t, 1 + c) if meth.randomized else None
                res = meth.run(pv, a, rng)
                f, b, r = evaluate_trial(res, labels)
                fdp[c, j], bnull[c, j], nrej[c, j] = f, b, r
                if res.pi0_hat is not None:
                    pi0[c, j] = float(res.pi0_hat)
                c += 1
    return bnull, fdp, nrej, pi0


def _se(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def run_monte_carlo(
    spec: GeneratorSpec,
    methods: Sequence[ProcedureSpec | str],
    alphas: Iterable[LevelLike],
    T: int,
    seed: int = 0,
    workers: int = 1,
) -> SimulationSummary:
    """T paired trials per (method, alpha) cell; deterministic given ``seed``."""
    if T < 1:
        raise ConfigError("number of trials must be >= 1")
    methods = [m if isinstance(m, ProcedureSpec) else ProcedureSpec(m) for m in methods]
    alphas = [parse_level(a) for a in alphas]
    trials = list(range(T))
    if workers > 1:
        chunks = [trials[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_trial_block, [(spec, methods, alphas, seed, ch) for ch in chunks]))
        order = np.argsort(np.concatenate([np.asarray(ch) for ch in chunks]), kind="stable")
        bnull, fdp, nrej, pi0 = (np.concatenate(p, axis=1)[:, order] for p in zip(*parts))
    else:
        bnull, fdp, nrej, pi0 = _trial_block((spec, methods, alphas, seed, trials))

    summary = SimulationSummary()
    c = 0
    for meth in methods:
        for a in alphas:
            frac = nrej[c] / spec.m
            try:
                bound = theoretical_bounds(spec, meth, a)
            except UnknownMethod:
                bound = None
            p = pi0[c]
            summary.rows.append(SummaryRow(
                method=meth.name,
                alpha=a,
                trials=T,
                bfdr=float(bnull[c].mean()),
                bfdr_se=_se(bnull[c].astype(float)),
                fdr=float(fdp[c].mean()),
                fdr_se=_se(fdp[c]),
                mean_rej_frac=float(frac.mean()),
                sd_rej_frac=float(frac.std(ddof=1)) if T > 1 else 0.0,
                mean_pi0_hat=None if np.isnan(p).all() else float(np.nanmean(p)),
                bound=bound,
            ))
            c += 1
    return summary


def boundary_null_curve(
    spec: GeneratorSpec, T: int, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Estimates of P(H_{sigma(k)} = 0) for the fixed top-k rules, k = 1..m.

    Returns (estimate, standard error), both of length m.
    """
    if T < 1:
        raise ConfigError("number of trials must be >= 1")
    null_at = np.zeros((T, spec.m), dtype=bool)
    for t in range(T):
        sample, labels = generate_trial(spec, _stream(seed, t, 0))
        pv = conformal_p_values(sample)
        null_at[t] = labels.h[pv.sigma] == 0
    est = null_at.mean(axis=0)
    se = null_at.std(axis=0, ddof=1) / math.sqrt(T) if T > 1 else np.zeros(spec.m)
    return est, se
