"""Draw one small instance (m=32, n=64, half novelties) and dump its lfdr curves.

The CSV has the same columns as `conformal-bfdr lfdr`; SL and SLC counts
are printed alongside.

    python scripts/lfdr_panel.py --seed 3 -o panel.csv
"""
import argparse
import csv
import sys
from fractions import Fraction

from conformal_bfdr import (
    conformal_p_values,
    generate_trial,
    lfdr_curve,
    make_rng,
    setting_a,
    sl,
    slc,
    slc_kmax_via_lfdr,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--alpha", default="0.8")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()

    sample, _ = generate_trial(setting_a(m=32, n=64, pi0=Fraction(1, 2)), make_rng(args.seed))
    pv = conformal_p_values(sample)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["k", "p_sorted", "p_tilde", "lfdr_raw", "lfdr_iso", "lfdr_gren", "gcm"])
    for row in lfdr_curve(pv).rows():
        w.writerow([row[0]] + ["" if v is None else f"{float(v):.6g}" for v in row[1:]])
    if args.output:
        fh.close()
    print(f"SL rejects {sl(pv, args.alpha).k_hat}, SLC rejects {slc(pv, args.alpha).k_hat} "
          f"(lfdr_iso threshold gives {slc_kmax_via_lfdr(pv, args.alpha)})", file=sys.stderr)


if __name__ == "__main__":
    main()
