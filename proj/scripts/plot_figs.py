#!/usr/bin/env python3
"""Plot emfleet outputs: score histograms, scree curves and 2-D embeddings.

Usage:
    python3 scripts/plot_figs.py --scored OUTDIR [--embed EMBDIR] [--out figs]

Reads the CSV/JSON artifacts written by `emfleet score` / `emfleet embed`;
writes one PNG per artifact.
"""
import argparse
import csv
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def plot_histograms(scored_dir: pathlib.Path, out_dir: pathlib.Path) -> None:
    for path in sorted(scored_dir.glob("hist__*.csv")):
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        centers = [(float(r["bin_lo"]) + float(r["bin_hi"])) / 2 for r in rows]
        widths = [float(r["bin_hi"]) - float(r["bin_lo"]) for r in rows]
        percents = [float(r["percent"]) for r in rows]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bar(centers, percents, width=widths, edgecolor="black", linewidth=0.3)
        ax.set_xlabel("aggregate outlier score")
        ax.set_ylabel("% of population")
        ax.set_title(path.stem.replace("hist__", ""))
        fig.tight_layout()
        fig.savefig(out_dir / (path.stem + ".png"), dpi=150)
        plt.close(fig)


def plot_scree(embed_dir: pathlib.Path, out_dir: pathlib.Path) -> None:
    for path in sorted(embed_dir.glob("scree*.csv")):
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        comps = [int(r["component"]) for r in rows]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.bar(comps, [100 * float(r["ratio"]) for r in rows], label="per component")
        ax.plot(comps, [100 * float(r["cumulative"]) for r in rows], "o-",
                color="tab:red", label="cumulative")
        ax.set_xlabel("principal component")
        ax.set_ylabel("% variance explained")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / (path.stem + ".png"), dpi=150)
        plt.close(fig)


def plot_embedding(embed_dir: pathlib.Path, out_dir: pathlib.Path) -> None:
    for path in sorted(embed_dir.glob("embedding*.csv")):
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        if not rows or "pc2" not in rows[0]:
            continue
        fig, ax = plt.subplots(figsize=(6, 5))
        gens = sorted({r["generation"] for r in rows})
        for gen in gens:
            pts = [r for r in rows if r["generation"] == gen]
            ax.scatter([float(r["pc1"]) for r in pts], [float(r["pc2"]) for r in pts],
                       label=gen, s=30)
        for r in rows:
            ax.annotate(r["group_key"], (float(r["pc1"]), float(r["pc2"])),
                        fontsize=6, alpha=0.7)
        ax.set_xlabel("pc1")
        ax.set_ylabel("pc2")
        if len(gens) > 1:
            ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / (path.stem + ".png"), dpi=150)
        plt.close(fig)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scored", type=pathlib.Path, help="directory from `emfleet score`")
    ap.add_argument("--embed", type=pathlib.Path, help="directory from `emfleet embed`")
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("figs"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    if args.scored:
        plot_histograms(args.scored, args.out)
    if args.embed:
        plot_scree(args.embed, args.out)
        plot_embedding(args.embed, args.out)


if __name__ == "__main__":
    main()
