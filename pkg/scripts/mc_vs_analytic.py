"""Monte Carlo density of the random model against the large-N curve.

Complex and real Ginibre fields at mu = m0 = 0.5, sigma_M = sigma_K = 1.
"""

import argparse
from pathlib import Path

import numpy as np

from _common import pyplot, save_table, steps
from vibspec.analytic import AnalyticDensity, upper_edge
from vibspec.ensemble import ModelParams
from vibspec.statistics import RandomModel, compare, run_ensemble, tabulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 1024])
    ap.add_argument("--samples", type=int, nargs="+", default=[20000, 200],
                    help="samples per size, same order as --sizes")
    ap.add_argument("--m0", type=float, default=0.5)
    ap.add_argument("--bins", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", default="auto")
    ap.add_argument("--out", type=Path, default=Path("results/mc_vs_analytic"))
    args = ap.parse_args()
    workers = args.workers if args.workers == "auto" else int(args.workers)
    if len(args.samples) != len(args.sizes):
        ap.error("--samples needs one value per size")

    ref = AnalyticDensity(args.m0)
    edges = np.linspace(0.0, 1.1 * upper_edge(args.m0), args.bins + 1)
    curves = {}
    for n, samples in zip(args.sizes, args.samples):
        for field in ("complex", "real"):
            params = ModelParams(n=n, m0=args.m0, field=field)
            est = run_ensemble(RandomModel(params), samples, args.seed, bins=edges, workers=workers).density
            rep = compare(est, ref)
            print(f"N={n:5d} {field:7s} samples={samples}: KS {rep['ks']:.4f}, bulk sup {rep['sup_bulk']:.4f}")
            curves[f"{field}_{n}"] = est
    for n in args.sizes:
        rep = compare(curves[f"real_{n}"], curves[f"complex_{n}"])
        print(f"N={n:5d} real vs complex: bulk KS {rep['ks_bulk']:.4f}")

    cols = {"x_left": edges[:-1], "x_right": edges[1:]}
    cols.update({k: v.heights for k, v in curves.items()})
    cols["analytic"] = tabulate(ref, edges).heights
    save_table(args.out / "mc_vs_analytic.csv", cols, {"m0": args.m0, "sizes": args.sizes, "samples": args.samples})

    plt = pyplot()
    if plt:
        fig, ax = plt.subplots(figsize=(6, 4))
        for k, est in curves.items():
            ax.step(*steps(est), where="post", label=k)
        ax.plot(0.5 * (edges[1:] + edges[:-1]), cols["analytic"], "k--", label="large N")
        ax.set(xlabel=r"$\omega^2$", ylabel=r"$\rho_H(\omega^2)$", ylim=(0, 3))
        ax.legend(fontsize=7)
        fig.savefig(args.out / "mc_vs_analytic.png", dpi=150, bbox_inches="tight")


if __name__ == "__main__":
    main()
