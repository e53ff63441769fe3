"""Harmonic phonon thermodynamics over a density of squared frequencies.

Units: k_B = 1, hbar is a parameter. Results are per mode.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from vibspec.analytic import QuadratureFailure

REL_TOL = 1e-8


@dataclass(frozen=True)
class ThermoPoint:
    beta: float
    hbar: float
    energy_per_mode: float
    cv_per_mode: float


@dataclass(frozen=True)
class DeltaDensity:
    """All modes at a single frequency omega_e (Einstein solid)."""

    omega_e: float

    @property
    def support(self) -> tuple[float, float]:
        return self.omega_e**2, self.omega_e**2

    def expect(self, f: Callable, epsrel: float = 0.0, points=None) -> tuple[float, float]:
        return float(f(self.omega_e**2)), 0.0


def omega_max(density) -> float:
    return float(np.sqrt(density.support[1]))


def mode_energy(omega, beta: float, hbar: float = 1.0):
    """hbar w (1/2 + 1/(exp(beta hbar w) - 1)); tends to 1/beta as w -> 0."""
    omega = np.asarray(omega, dtype=float)
    y = beta * hbar * omega
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        thermal = np.where(y > 0, hbar * omega / np.expm1(y), 1.0 / beta)
    return 0.5 * hbar * omega + thermal


def mode_heat_capacity(omega, beta: float, hbar: float = 1.0):
    """(y/2)^2 / sinh^2(y/2) with y = beta hbar w, written to stay finite for large y."""
    h = 0.5 * beta * hbar * np.asarray(omega, dtype=float)
    # (h / sinh h)^2 = 4 h^2 e^{-2h} / (1 - e^{-2h})^2
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        e = np.exp(-2.0 * h)
        val = 4.0 * h * h * e / (-np.expm1(-2.0 * h)) ** 2
    return np.where(h > 1e-4, val, 1.0 - h * h / 3.0)


def _thermal_points(beta: float, hbar: float) -> list[float]:
    """w^2 values where beta hbar w = 0.1, 1, 10, 40: the thermal crossover scales."""
    return [(y / (beta * hbar)) ** 2 for y in (0.1, 1.0, 10.0, 40.0)]


def _integrate(density, f, what: str, points=None) -> float:
    val, err = density.expect(f, epsrel=1e-10, points=points)
    if err > REL_TOL * max(abs(val), 1e-300):
        raise QuadratureFailure(f"{what}: error estimate {err:.2e} exceeds tolerance for value {val:.6e}")
    return float(val)


def _check_beta(beta: float) -> None:
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be positive and finite, got {beta!r}")


def mean_energy(beta: float, density, hbar: float = 1.0) -> float:
    """Thermal energy per mode, including zero-point energy."""
    _check_beta(beta)
    return _integrate(density, lambda w2: mode_energy(np.sqrt(w2), beta, hbar), "mean energy", _thermal_points(beta, hbar))


def zero_point_energy(density, hbar: float = 1.0) -> float:
    return _integrate(density, lambda w2: 0.5 * hbar * np.sqrt(w2), "zero-point energy")


def specific_heat(beta: float, density, hbar: float = 1.0) -> float:
    """Heat capacity per mode in units of k_B."""
    _check_beta(beta)
    return _integrate(density, lambda w2: mode_heat_capacity(np.sqrt(w2), beta, hbar), "specific heat", _thermal_points(beta, hbar))


def thermo_point(beta: float, density, hbar: float = 1.0) -> ThermoPoint:
    return ThermoPoint(beta, hbar, mean_energy(beta, density, hbar), specific_heat(beta, density, hbar))


def thermo_curve(betas: Sequence[float], density, hbar: float = 1.0) -> list[ThermoPoint]:
    return [thermo_point(float(b), density, hbar) for b in betas]


def consistency_check(beta_grid: Sequence[float], density, hbar: float = 1.0, step: float = 1e-2) -> float:
    """Largest relative gap between dE/dT and specific_heat on the grid.

    dE/dT uses a central difference with T-step h = step * T, extrapolated
    over h and h/2 to cancel the O(h^2) term.
    """
    betas = np.asarray(beta_grid, dtype=float)
    if betas.size < 3:
        raise ValueError("consistency check needs at least 3 grid points")
    worst = 0.0
    for b in betas:
        T = 1.0 / b

        def dEdT(h):
            ep = mean_energy(1.0 / (T + h), density, hbar)
            em = mean_energy(1.0 / (T - h), density, hbar)
            return (ep - em) / (2.0 * h)

        h = step * T
        fd = (4.0 * dEdT(0.5 * h) - dEdT(h)) / 3.0
        cv = specific_heat(b, density, hbar)
        worst = max(worst, abs(fd - cv) / max(abs(cv), 1e-300))
    return worst


def curve_to_csv(points: Sequence[ThermoPoint], header: dict | None = None) -> str:
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}={v}\n")
    buf.write("beta,energy_per_mode,cv_per_mode\n")
    for p in points:
        buf.write(f"{p.beta:.17g},{p.energy_per_mode:.17g},{p.cv_per_mode:.17g}\n")
    return buf.getvalue()
