"""Plot the revenue-ratio curves from a figure2.csv produced by the CLI."""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv", help="figure2.csv")
    ap.add_argument("-o", "--output", default="figure2.png")
    args = ap.parse_args()

    with open(args.csv, newline="") as f:
        rows = list(csv.DictReader(f))
    n = [int(r["n"]) for r in rows]
    mean = [float(r["mean_ratio"]) for r in rows]
    se = [float(r["se"]) for r in rows]
    median = [float(r["median_ratio"]) for r in rows]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(n, mean, yerr=se, marker="o", capsize=3, label="E[p(n-1:n)] / E[p(n:n)]")
    ax.plot(n, median, marker="s", linestyle="--", label="median ratio")
    ax.set_xscale("log")
    ax.set_xlabel("number of solvers n")
    ax.set_ylabel("ratio")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
