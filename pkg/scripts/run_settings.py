"""Monte Carlo sweep over the synthetic settings (a), (b), (c).

Writes one CSV per setting into --out. Defaults are a quick pass; use
--trials 1000 and --full-size for the full-size grids.

    python scripts/run_settings.py --settings a b --trials 200 --out results/
"""
import argparse
import time
from pathlib import Path

from conformal_bfdr import ProcedureSpec, run_monte_carlo, setting_a, setting_b, setting_c

METHODS = [
    "bh", "sl", "slc", "slg", "aslc",
    ProcedureSpec("slc+"), ProcedureSpec("aslc+"),
    ProcedureSpec("slc++"), ProcedureSpec("slc++/2"),
]
ALPHAS = [f"{k / 20:.2f}" for k in range(1, 11)]


def build(name: str, full: bool):
    if name == "c":
        return setting_c()
    maker = setting_a if name == "a" else setting_b
    return maker() if full else maker(m=500, n=1000)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--settings", nargs="+", default=["a"], choices=["a", "b", "c"])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--full-size", action="store_true", help="m=2000, n=4000 for (a) and (b)")
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.settings:
        spec = build(name, args.full_size)
        t0 = time.perf_counter()
        summ = run_monte_carlo(spec, METHODS, ALPHAS, args.trials, args.seed, args.workers)
        path = out / f"setting_{name}.csv"
        with open(path, "w", newline="") as fh:
            summ.to_csv(fh)
        print(f"setting {name}: m={spec.m} n={spec.n} T={args.trials} "
              f"-> {path} ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
