#!/usr/bin/env python3
"""Plot median and interquartile band of the relative gap from *_summary.csv files."""
import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [[float(r[c]) for r in rows] for c in ("k", "median", "q1", "q3")]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("summaries", nargs="+", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("gap.png"))
    ap.add_argument("--log", action="store_true", help="log scale on the gap axis")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(6, 4))
    for path in args.summaries:
        k, med, q1, q3 = read(path)
        label = path.stem.removesuffix("_summary")
        ax.plot(k, med, label=label)
        ax.fill_between(k, q1, q3, alpha=0.25)
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative payoff gap")
    if args.log:
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
