"""Spectra of charged multi-segment pendula, uniform and disordered.

Uniform chains for (Q, g) in {(1, 1), (0, 1), (1, 0)} plus disordered
counterparts, all with eigenvalues divided by N^2. The gravity-only chain is
compared against Marchenko-Pastur after matching band edges.
"""

import argparse
from pathlib import Path

import numpy as np

from _common import pyplot, save_table, steps
from vibspec.analytic import MarchenkoPastur
from vibspec.pendulum import uniform_config
from vibspec.statistics import (
    DensityEstimate,
    Pendulum,
    compare,
    edge_scale,
    fit_low_frequency,
    run_ensemble,
    tabulate,
)

CASES = {"Q1_g1": (1.0, 1.0), "Q0_g1": (0.0, 1.0), "Q1_g0": (1.0, 0.0)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2048, help="segments of the uniform chains")
    ap.add_argument("--n-disorder", type=int, default=256)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--spread", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", default="auto")
    ap.add_argument("--out", type=Path, default=Path("results/pendulum"))
    args = ap.parse_args()
    workers = args.workers if args.workers == "auto" else int(args.workers)

    spectra = {}
    for name, (q, g) in CASES.items():
        cfg = uniform_config(args.n, charge_scale=q, gravity=g)
        spectra[name] = run_ensemble(Pendulum(cfg, scale_by_n2=True), 1, args.seed, keep_eigenvalues=True).eigenvalues
        dcfg = uniform_config(args.n_disorder, charge_scale=q, gravity=g)
        src = Pendulum(dcfg, args.spread, scale_by_n2=True)
        w = run_ensemble(src, args.samples, args.seed, workers=workers, keep_eigenvalues=True).eigenvalues
        spectra[name + "_disordered"] = w
        if q > 0:
            fit = fit_low_frequency(DensityEstimate.from_values(w, bins=np.geomspace(1e-5, 10.0, 121)), (1e-3, 1e-1))
            print(f"{name} disordered: low-frequency exponent {fit.exponent:.3f} +/- {fit.exponent_stderr:.3f}")

    mp = MarchenkoPastur()
    s = edge_scale(spectra["Q0_g1"], mp.support[1])
    rep = compare(DensityEstimate.from_values(spectra["Q0_g1"] * s, bins=np.linspace(0, 4, 401)), mp)
    print(f"gravity-only chain vs Marchenko-Pastur: bulk KS {rep['ks_bulk']:.4f} at edge scale {s:.5f}")

    edges = np.linspace(0.0, 1.01 * max(w.max() for w in spectra.values()), 301)
    curves = {
        k: DensityEstimate.from_values(w, bins=edges, samples=1 if k in CASES else args.samples)
        for k, w in spectra.items()
    }

    cols = {"x_left": edges[:-1], "x_right": edges[1:]}
    cols.update({k: v.heights for k, v in curves.items()})
    cols["marchenko_pastur"] = tabulate(MarchenkoPastur(), edges).heights
    save_table(args.out / "pendulum_density.csv", cols, {"n": args.n, "n_disorder": args.n_disorder,
                                                          "samples": args.samples, "spread": args.spread})

    plt = pyplot()
    if plt:
        fig, ax = plt.subplots(figsize=(6, 4))
        for k, est in curves.items():
            ax.step(*steps(est), where="post", ls=":" if "disordered" in k else "-", label=k)
        ax.plot(0.5 * (edges[1:] + edges[:-1]), cols["marchenko_pastur"], "k--", label="Marchenko-Pastur")
        ax.set(xlabel=r"$\omega^2/N^2$", ylabel="density", ylim=(0, 2.5))
        ax.legend(fontsize=7)
        fig.savefig(args.out / "pendulum_density.png", dpi=150, bbox_inches="tight")


if __name__ == "__main__":
    main()
