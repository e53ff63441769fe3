"""Density shapes across sigma_M at fixed N, and convergence in N at fixed mu.

Panel a: N = 128, sigma_K = 1, m0 = 1, several sigma_M, with Marchenko-Pastur
for the smallest sigma_M. Panel b: mu = 0.1, sigma_M = sigma_K = 1, growing N.
"""

import argparse
from pathlib import Path

import numpy as np

from _common import pyplot, save_table, steps
from vibspec.analytic import AnalyticDensity, MarchenkoPastur
from vibspec.ensemble import ModelParams
from vibspec.statistics import RandomModel, compare, run_ensemble, tabulate


def panel_a(args, workers, plt):
    curves = {}
    for sm in args.sigma_m:
        params = ModelParams(n=128, m0=1.0, sigma_m=sm)
        ref = AnalyticDensity.from_params(params)
        edges = np.linspace(0.0, 1.1 * ref.support[1], args.bins + 1)
        est = run_ensemble(RandomModel(params), args.samples_a, args.seed, bins=edges, workers=workers).density
        rep = compare(est, ref)
        print(f"sigma_M={sm:6g} mu={ref.mu:.3g} edge={ref.support[1]:.4g}: KS {rep['ks']:.4f}")
        curves[sm] = (est, ref)
        save_table(args.out / f"a_sigma_m_{sm:g}.csv",
                   {"x_left": edges[:-1], "x_right": edges[1:], "mc": est.heights,
                    "analytic": tabulate(ref, edges).heights}, {"sigma_m": sm, "mu": ref.mu})
    if plt:
        fig, ax = plt.subplots(figsize=(6, 4))
        for sm, (est, ref) in curves.items():
            ax.step(*steps(est), where="post", label=rf"$\sigma_M={sm:g}$")
        sm = min(args.sigma_m)
        mp = MarchenkoPastur(1.0 / ModelParams(n=1, m0=1.0, sigma_m=sm).m0)
        x = np.linspace(1e-3, mp.support[1], 400)
        ax.plot(x, mp.pdf(x), "k:", label="Marchenko-Pastur")
        ax.set(xscale="log", yscale="log", xlabel=r"$\omega^2$", ylabel="density")
        ax.legend(fontsize=7)
        fig.savefig(args.out / "a_sigma_m.png", dpi=150, bbox_inches="tight")


def panel_b(args, workers, plt):
    ref = AnalyticDensity(0.1)
    edges = np.linspace(0.0, 1.1 * ref.support[1], args.bins + 1)
    cols = {"x_left": edges[:-1], "x_right": edges[1:]}
    budget = args.eigenvalues_b
    for n in args.sizes:
        samples = max(1, budget // n)
        est = run_ensemble(RandomModel(ModelParams(n=n, m0=0.1)), samples, args.seed, bins=edges,
                           workers=workers).density
        rep = compare(est, ref)
        print(f"N={n:5d} samples={samples}: KS {rep['ks']:.4f}, bulk KS {rep['ks_bulk']:.4f}")
        cols[f"n_{n}"] = est.heights
    cols["analytic"] = tabulate(ref, edges).heights
    save_table(args.out / "b_sizes.csv", cols, {"mu": 0.1, "eigenvalue_budget": budget})
    if plt:
        fig, ax = plt.subplots(figsize=(6, 4))
        centers = 0.5 * (edges[1:] + edges[:-1])
        for k, v in cols.items():
            if k.startswith("n_"):
                ax.step(edges, np.append(v, v[-1]), where="post", label=k.replace("n_", "N="))
        ax.plot(centers, cols["analytic"], "k--", label="large N")
        ax.set(xlabel=r"$\omega^2$", ylabel="density", ylim=(0, 4))
        ax.legend(fontsize=7)
        fig.savefig(args.out / "b_sizes.png", dpi=150, bbox_inches="tight")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma-m", type=float, nargs="+", default=[500, 100, 10, 2, 1, 0.5, 0.1])
    ap.add_argument("--samples-a", type=int, default=400)
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 128, 512, 2048])
    ap.add_argument("--eigenvalues-b", type=int, default=2**16, help="eigenvalue budget per size in panel b")
    ap.add_argument("--bins", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", default="auto")
    ap.add_argument("--out", type=Path, default=Path("results/density_sigma_n"))
    args = ap.parse_args()
    workers = args.workers if args.workers == "auto" else int(args.workers)
    plt = pyplot()
    panel_a(args, workers, plt)
    panel_b(args, workers, plt)


if __name__ == "__main__":
    main()
