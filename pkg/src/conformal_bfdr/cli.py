"""Command line front end.

    conformal-bfdr detect   --calib C.csv --test T.csv --method slc --alpha 0.2
    conformal-bfdr simulate config.json -o summary.csv
    conformal-bfdr lfdr     --calib C.csv --test T.csv --alpha 0.8 -o curve.csv

Exit codes: 0 success, 1 failed verification, 2 bad input, 3 ties in
strict mode. All indices in outputs are 0-based.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from .lfdr import lfdr_curve, slc_kmax_shifted, slc_kmax_via_lfdr
from .montecarlo import (
    METHODS,
    Dist,
    GeneratorSpec,
    ProcedureSpec,
    evaluate_trial,
    run_monte_carlo,
)
from .procedures import ConfigError, parse_level, slc
from .pvalues import InvalidScore, Labels, ScoreSample, TiesError, conformal_p_values
from .subsampling import make_rng


class InputError(ValueError):
    pass


def read_column(path: str | Path, header: str) -> list[str]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if not rows or rows[0][0].strip().lower() != header:
        raise InputError(f"{path}: expected a header line '{header}'")
    return [r[0].strip() for r in rows[1:]]


def read_scores(path: str | Path) -> list[float]:
    out = []
    for i, v in enumerate(read_column(path, "score"), start=2):
        try:
            out.append(float(v))
        except ValueError:
            raise InputError(f"{path}:{i}: not a number: {v!r}") from None
    if not out:
        raise InputError(f"{path}: no scores")
    return out


def read_labels(path: str | Path) -> list[int]:
    out = []
    for i, v in enumerate(read_column(path, "label"), start=2):
        if v not in ("0", "1"):
            raise InputError(f"{path}:{i}: label must be 0 or 1, got {v!r}")
        out.append(int(v))
    return out


def _load_sample(args) -> ScoreSample:
    policy = "reject_input" if args.strict_ties else "break_by_index"
    return ScoreSample(read_scores(args.calib), read_scores(args.test), policy)


def _method_name(args) -> str:
    method = args.method.lower()
    if method not in METHODS:
        raise ConfigError(f"--method: unknown method {args.method!r}")
    if args.halve:
        if method not in ("slc++", "aslc++"):
            raise ConfigError("--halve only applies to slc++ and aslc++")
        method += "/2"
    return method


def _procedure(args, method: str) -> ProcedureSpec:
    return ProcedureSpec(
        method,
        s0=args.s0,
        s=args.subsample_size,
        rho=Fraction(args.subsample_ratio),
        s_min=args.s_min,
        B=args.B,
        gamma=Fraction(args.gamma),
    )


def _frac(x: Fraction | None) -> str | None:
    return None if x is None else str(x)


def cmd_detect(args) -> int:
    method = _method_name(args)
    alpha = parse_level(args.alpha)
    sample = _load_sample(args)
    pv = conformal_p_values(sample)
    spec = _procedure(args, method)
    res = spec.run(pv, alpha, make_rng(args.seed))
    report = {
        "method": method,
        "alpha": args.alpha,
        "adjusted_level": str(res.adjusted_level),
        "n": pv.n,
        "m": pv.m,
        "k_hat": res.k_hat,
        "threshold_score": None if math.isinf(res.threshold_score) else res.threshold_score,
        "boundary_index": res.boundary_index,
        "rejected": list(res.rejected),
        "pi0_hat": _frac(res.pi0_hat),
        "seed": args.seed,
        "ties_broken": pv.ties_broken,
        "params": {
            "s0": args.s0,
            "subsample_size": args.subsample_size,
            "subsample_ratio": args.subsample_ratio,
            "s_min": args.s_min,
            "B": args.B,
            "gamma": args.gamma,
        },
    }
    if args.labels:
        labels = Labels(read_labels(args.labels))
        if labels.m != pv.m:
            raise InputError(f"labels file has {labels.m} rows, test file has {pv.m}")
        fdp, bnull, _ = evaluate_trial(res, labels)
        report["fdp"] = fdp
        report["boundary_is_null"] = bnull

    if args.verify:
        try:
            stored = json.loads(Path(args.verify).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read report {args.verify}: {exc}") from None
        ok = stored.get("k_hat") == res.k_hat and stored.get("rejected") == list(res.rejected)
        print(f"verify: stored k_hat={stored.get('k_hat')} recomputed k_hat={res.k_hat} "
              f"{'OK' if ok else 'MISMATCH'}")
        return 0 if ok else 1

    text = json.dumps(report, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"k_hat={res.k_hat} rejected={res.n_rejected}", file=sys.stderr if not args.output else sys.stdout)
    return 0


def load_sim_config(path: str | Path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("generator", "methods", "alphas"):
        if key not in cfg:
            raise ConfigError(f"config: missing field {key!r}")
    g = cfg["generator"]
    try:
        gen = GeneratorSpec(
            Dist.from_dict(g["null"]), Dist.from_dict(g["alt"]), int(g["n"]), int(g["m"]), int(g["m0"])
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"config: generator: missing or bad field {exc}") from None
    except ConfigError as exc:
        raise ConfigError(f"config: generator: {exc}") from None
    methods = []
    for item in cfg["methods"]:
        try:
            methods.append(ProcedureSpec.from_config(item))
        except (ConfigError, TypeError) as exc:
            raise ConfigError(f"config: methods: {exc}") from None
    try:
        alphas = [parse_level(str(a)) for a in cfg["alphas"]]
    except ConfigError as exc:
        raise ConfigError(f"config: alphas: {exc}") from None
    if not alphas or not methods:
        raise ConfigError("config: methods and alphas must be non-empty")
    return {
        "generator": gen,
        "methods": methods,
        "alphas": alphas,
        "trials": cfg.get("trials", 1000),
        "seed": cfg.get("seed", 0),
    }


def cmd_simulate(args) -> int:
    cfg = load_sim_config(args.config)
    trials = args.trials if args.trials is not None else cfg["trials"]
    seed = args.seed if args.seed is not None else cfg["seed"]
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"config: trials must be a positive integer, got {trials!r}")
    if not isinstance(seed, int):
        raise ConfigError(f"config: seed must be an integer, got {seed!r}")
    summary = run_monte_carlo(
        cfg["generator"], cfg["methods"], cfg["alphas"], trials, seed, workers=args.workers
    )
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            summary.to_csv(fh)
        print(f"wrote {len(summary.rows)} rows to {args.output}")
    else:
        sys.stdout.write(summary.to_csv())
    return 0


def cmd_lfdr(args) -> int:
    alpha = parse_level(args.alpha)
    sample = _load_sample(args)
    pv = conformal_p_values(sample)
    curve = lfdr_curve(pv)
    out = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["k", "p_sorted", "p_tilde", "lfdr_raw", "lfdr_iso", "lfdr_gren", "gcm"])
        for row in curve.rows():
            w.writerow([row[0]] + ["" if v is None else repr(float(v)) for v in row[1:]])
        if alpha / pv.m > Fraction(1, pv.n + 1):
            ks = (
                slc(pv, alpha).k_hat,
                slc_kmax_shifted(pv, alpha),
                slc_kmax_via_lfdr(pv, alpha, "iso"),
                slc_kmax_via_lfdr(pv, alpha, "gren"),
            )
            out.write("# slc_k_hat original={} shifted={} iso={} gren={}\n".format(*ks))
        else:
            out.write("# slc_k_hat precondition unmet: alpha/m <= 1/(n+1)\n")
    finally:
        if args.output:
            out.close()
    return 0


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--calib", required=True, help="CSV with header 'score'")
    p.add_argument("--test", required=True, help="CSV with header 'score'")
    p.add_argument("--strict-ties", action="store_true", help="fail (exit 3) on tied scores")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conformal-bfdr", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="run a procedure on score files")
    _add_input_flags(d)
    d.add_argument("--labels", help="optional CSV with header 'label' (0/1)")
    d.add_argument("--method", default="slc", help="one of: " + ", ".join(METHODS))
    d.add_argument("--alpha", required=True, help="level in (0,1), parsed exactly")
    d.add_argument("--s0", type=int, default=None, help="Storey parameter (default floor((n+1)/2)-1)")
    d.add_argument("--subsample-size", type=int, default=None)
    d.add_argument("--subsample-ratio", default="0.2", help="rho in the subsample-size rule")
    d.add_argument("--s-min", type=int, default=100)
    d.add_argument("--B", type=int, default=51)
    d.add_argument("--gamma", default="0.5")
    d.add_argument("--halve", action="store_true", help="use alpha/2 (slc++/2, aslc++/2)")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("-o", "--output", help="JSON report path (default: stdout)")
    d.add_argument("--verify", metavar="REPORT", help="recompute and compare with a saved report")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("simulate", help="Monte Carlo run from a JSON config")
    s.add_argument("config")
    s.add_argument("-o", "--output", help="CSV summary path (default: stdout)")
    s.add_argument("--trials", type=int, default=None, help="override config trials")
    s.add_argument("--seed", type=int, default=None, help="override config seed")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    lf = sub.add_parser("lfdr", help="export lfdr curves as CSV")
    _add_input_flags(lf)
    lf.add_argument("--alpha", required=True)
    lf.add_argument("-o", "--output")
    lf.set_defaults(func=cmd_lfdr)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TiesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, ConfigError, InvalidScore, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
