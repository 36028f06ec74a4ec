#!/usr/bin/env python3
"""Plot ratio curves written by `probedim sweep`.

Usage: plot_ratios.py OUT_DIR [--kmax 15] [--save figure.png]

One panel per qubit count, one line per noise variance, median ratio with
error bars on a log scale.
"""
import argparse
import csv
import re
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

NAME = re.compile(r"ratios_N(\d+)_sigma2_(.+)\.csv$")


def load(path, kmax):
    ks, med, err = [], [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            k = int(row["k"])
            if k > kmax:
                break
            ks.append(k)
            med.append(float(row["median_ratio"]))
            err.append(float(row["err_bar"]))
    return ks, med, err


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--kmax", type=int, default=15)
    ap.add_argument("--save", type=Path)
    args = ap.parse_args()

    cells = defaultdict(list)
    for p in sorted(args.out_dir.glob("ratios_N*_sigma2_*.csv")):
        m = NAME.search(p.name)
        if m:
            cells[int(m.group(1))].append((float(m.group(2)), p))
    if not cells:
        raise SystemExit(f"no ratio curves in {args.out_dir}")

    fig, axes = plt.subplots(1, len(cells), figsize=(5 * len(cells), 4), squeeze=False)
    for ax, n in zip(axes[0], sorted(cells)):
        for sigma2, path in sorted(cells[n]):
            ks, med, err = load(path, args.kmax)
            ax.errorbar(ks, med, yerr=err, marker="o", ms=3, capsize=2, label=f"σ² = {sigma2:g}")
        ax.set_yscale("log")
        ax.set_title(f"N = {n}")
        ax.set_xlabel("k")
        ax.set_ylabel("λ_k / λ_(k+1)")
        ax.legend(fontsize="small")
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
