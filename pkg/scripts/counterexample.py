"""SL boundary-FDR on the disjoint-support instance (n=9, m=40, m1=20).

Nulls and calibration scores are U(0,1), novelties U(1,2). Once SL rejects
anything, its boundary null rate sits near m0/(m0+n) = 20/29, far above
alpha*m0/m. SLC stays under that level.

    python scripts/counterexample.py --trials 10000
"""
import argparse

from conformal_bfdr import counterexample, run_monte_carlo


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    spec = counterexample()
    alphas = ["0.05", "0.1", "0.25", "0.4", "0.6", "0.8"]
    summ = run_monte_carlo(spec, ["sl", "slc", "bh"], alphas, args.trials, args.seed)
    print(f"lower bound m0/(m0+n) = {spec.m0 / (spec.m0 + spec.n):.4f}")
    print(f"{'method':<6} {'alpha':>5} {'bfdr':>7} {'se':>7} {'fdr':>7} {'alpha*pi0':>9}")
    for r in summ.rows:
        print(f"{r.method:<6} {float(r.alpha):>5.2f} {r.bfdr:>7.4f} {r.bfdr_se:>7.4f} "
              f"{r.fdr:>7.4f} {float(r.alpha * spec.pi0):>9.3f}")


if __name__ == "__main__":
    main()
