#!/usr/bin/env python3
"""Render the comparison CSVs produced by `vri compare` as PNG figures.

Usage: python3 scripts/plot_figures.py <csv_dir> [out_dir]

Reads fig1..fig5 CSVs from <csv_dir> and writes one PNG per figure to
out_dir (default: <csv_dir>). Purely cosmetic; the CSVs are the contract.
"""

import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path: Path):
    with path.open() as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    cols = {name: [] for name in header}
    for row in rows[1:]:
        for name, cell in zip(header, row):
            cols[name].append(float("nan") if cell == "nan" else float(cell))
    return cols


def plot_lines(cols, ys, title, ylabel, out):
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in ys:
        ax.plot(cols["t"], cols[name], label=name)
    ax.set_xlabel("t (years)")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    print(f"wrote {out}")


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    src = Path(sys.argv[1])
    dst = Path(sys.argv[2]) if len(sys.argv) > 2 else src
    dst.mkdir(parents=True, exist_ok=True)

    c = read_csv(src / "fig1_paths.csv")
    plot_lines(c, ["lambda_hat", "asset"], "Mortality intensity and risky asset",
               "level", dst / "fig1_paths.png")

    c = read_csv(src / "fig2_strategies.csv")
    plot_lines(c, ["pi_lrd", "pi_markov", "a_lrd", "a_markov"],
               "Equilibrium strategies under the two models", "control",
               dst / "fig2_strategies.png")

    c = read_csv(src / "fig3_wealth.csv")
    plot_lines(c, ["x_lrd", "x_markov"], "Wealth under the equilibrium strategies",
               "wealth", dst / "fig3_wealth.png")

    for name, title in [
        ("fig4_reinsurance_pctdiff", "Reinsurance strategy: percentage differences"),
        ("fig5_wealth_pctdiff", "Wealth: percentage differences"),
    ]:
        c = read_csv(src / f"{name}.csv")
        ys = [k for k in c if k != "t"]
        plot_lines(c, ys, title, "% difference (LRD vs Markov)", dst / f"{name}.png")


if __name__ == "__main__":
    main()
