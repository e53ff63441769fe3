"""Participation ratio of normal modes across the band, real and complex fields."""

import argparse
from pathlib import Path

from _common import pyplot, save_table
from vibspec.ensemble import ModelParams
from vibspec.statistics import RandomModel, run_ensemble


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--m0", type=float, default=0.5)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--bins", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", default="auto")
    ap.add_argument("--out", type=Path, default=Path("results/participation"))
    args = ap.parse_args()
    workers = args.workers if args.workers == "auto" else int(args.workers)

    # 1 / E[sum |a_i|^4] for Haar-random unit vectors in C^N and R^N
    haar = {"complex": (args.n + 1) / (2 * args.n), "real": (args.n + 2) / (3 * args.n)}
    curves = {}
    for field in ("complex", "real"):
        params = ModelParams(n=args.n, m0=args.m0, field=field)
        res = run_ensemble(RandomModel(params), args.samples, args.seed, want_vectors=True, workers=workers,
                           pbins=args.bins)
        c = res.participation
        curves[field] = c
        keep = c.counts >= 0.01 * c.counts.sum()
        print(f"{field:7s} N={args.n}: mean p {c.mean():.4f}, populated bins in "
              f"[{c.p[keep].min():.4f}, {c.p[keep].max():.4f}], Haar-vector value {haar[field]:.4f}")
        save_table(args.out / f"{field}.csv",
                   {"lo": c.bin_edges[:-1], "hi": c.bin_edges[1:], "p": c.p, "stderr": c.stderr, "count": c.counts},
                   {"n": args.n, "m0": args.m0, "samples": args.samples})

    plt = pyplot()
    if plt:
        fig, ax = plt.subplots(figsize=(6, 4))
        for field, c in curves.items():
            centers = 0.5 * (c.bin_edges[1:] + c.bin_edges[:-1])
            ax.errorbar(centers, c.p, c.stderr, fmt="o-", ms=3, label=field)
        ax.set(xlabel=r"$\omega^2$", ylabel="participation ratio", ylim=(0, 1))
        ax.legend()
        fig.savefig(args.out / "participation.png", dpi=150, bbox_inches="tight")


if __name__ == "__main__":
    main()
