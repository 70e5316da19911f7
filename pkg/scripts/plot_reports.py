#!/usr/bin/env python3
"""Plot accuracy-vs-dataset-size curves and parity scatter from report CSVs."""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

LABELS = ("u_m", "dp", "g")


def plot_accuracy(df: pd.DataFrame, out: Path):
    fig, axes = plt.subplots(1, 3, figsize=(13, 4), sharex=True)
    for ax, label in zip(axes, LABELS):
        sub = df[df.label == label]
        for model, grp in sub.groupby("model"):
            med = grp.groupby("d")["mae"].median()
            ax.loglog(med.index, med.values, "o-", label=model)
        ax.set_title(label)
        ax.set_xlabel("dataset size d")
    axes[0].set_ylabel("median MAE")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


def plot_parity(df: pd.DataFrame, d: int, out: Path):
    models = sorted(df.model.unique())
    fig, axes = plt.subplots(len(models), 3, figsize=(12, 3.2 * len(models)),
                             squeeze=False)
    sub_d = df[df.d == d]
    for i, model in enumerate(models):
        for j, label in enumerate(LABELS):
            sub = sub_d[(sub_d.model == model) & (sub_d.label == label)]
            ax = axes[i][j]
            ax.scatter(sub.target, sub.achieved, s=4, alpha=0.4)
            lims = [sub.target.min(), sub.target.max()]
            ax.plot(lims, lims, "k--", lw=0.8)
            ax.set_title(f"{model} / {label}")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--accuracy", help="accuracy.csv from accuracy-sweep")
    ap.add_argument("--parity", help="parity.csv from accuracy-sweep")
    ap.add_argument("--parity-d", type=int, default=5000)
    ap.add_argument("--out-dir", default="figures")
    args = ap.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.accuracy:
        plot_accuracy(pd.read_csv(args.accuracy), out_dir / "accuracy.png")
    if args.parity:
        plot_parity(pd.read_csv(args.parity), args.parity_d,
                    out_dir / f"parity_d{args.parity_d}.png")
    if not (args.accuracy or args.parity):
        ap.error("nothing to plot; pass --accuracy and/or --parity")


if __name__ == "__main__":
    main()
