#!/usr/bin/env python3
"""Optional plotting convenience: render results/resolution CSVs emitted by
the `ufo` CLI. Not part of acceptance; requires matplotlib."""

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path


def load_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_results(path, out):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = [r for r in load_rows(path) if r["seed"] != "aggregate"]
    by_model = defaultdict(list)
    for r in rows:
        by_model[r["model"]].append(r)
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    for metric, ax in zip(("rel_l2", "barron_rel"), axes):
        for model, rs in sorted(by_model.items()):
            scen = [r["scenario"] for r in rs]
            vals = [float(r[metric]) for r in rs]
            ax.plot(range(len(scen)), vals, "o-", label=model)
            ax.set_xticks(range(len(scen)))
            ax.set_xticklabels(scen, rotation=45, ha="right", fontsize=7)
        ax.set_ylabel(metric)
        ax.set_yscale("log")
        ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


def plot_resolution(path, out):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = load_rows(path)
    res = [int(r["resolution"]) for r in rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    for metric in ("rel_l2", "barron_rel"):
        ax.plot(res, [float(r[metric]) for r in rows], "o-", label=metric)
    ax.set_xlabel("grid side")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", type=Path)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()
    out = args.out or args.csv.with_suffix(".png")
    header = args.csv.read_text().splitlines()[0]
    if header.startswith("resolution"):
        plot_resolution(args.csv, out)
    else:
        plot_results(args.csv, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
