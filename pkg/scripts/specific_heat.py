"""Specific heat per mode against inverse temperature for several mu.

sigma_M = sigma_K = 1 so omega_0^2 = 1, hbar = 1. Prints the low-temperature
product beta * c_V, which tends to 2 pi^2 c / 3 for a density ~ c / omega.
"""

import argparse
from pathlib import Path

import numpy as np

from _common import pyplot, save_table
from vibspec.analytic import AnalyticDensity
from vibspec.thermo import consistency_check, omega_max, thermo_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, nargs="+", default=[1e-4, 0.1, 1.0, 100.0])
    ap.add_argument("--beta-min", type=float, default=1e-2)
    ap.add_argument("--beta-max", type=float, default=1e3)
    ap.add_argument("--points", type=int, default=81)
    ap.add_argument("--hbar", type=float, default=1.0)
    ap.add_argument("--out", type=Path, default=Path("results/specific_heat"))
    args = ap.parse_args()

    betas = np.geomspace(args.beta_min, args.beta_max, args.points)
    cols = {"beta": betas}
    for mu in args.mu:
        d = AnalyticDensity(mu)
        pts = thermo_curve(betas, d, args.hbar)
        cv = np.array([p.cv_per_mode for p in pts])
        cols[f"cv_mu_{mu:g}"] = cv
        cols[f"energy_mu_{mu:g}"] = [p.energy_per_mode for p in pts]
        c = d.low_frequency_coefficient()
        gap = consistency_check(betas[:: max(1, len(betas) // 8)], d, args.hbar)
        print(f"mu={mu:8g} w_max={omega_max(d):.4g} beta*c_V at beta_max {betas[-1] * cv[-1]:.4f} "
              f"(2 pi^2 c/3 = {2 * np.pi**2 * c / 3:.4f}), dE/dT gap {gap:.1e}")
    save_table(args.out / "specific_heat.csv", cols, {"hbar": args.hbar, "mu": args.mu})

    plt = pyplot()
    if plt:
        fig, ax = plt.subplots(figsize=(6, 4))
        for mu in args.mu:
            ax.plot(betas, cols[f"cv_mu_{mu:g}"], label=rf"$\mu={mu:g}$")
        ax.set(xscale="log", xlabel=r"$\beta$", ylabel=r"$c_V/k_B$")
        ax.legend()
        fig.savefig(args.out / "specific_heat.png", dpi=150, bbox_inches="tight")


if __name__ == "__main__":
    main()
