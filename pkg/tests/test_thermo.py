import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from oracles import einstein_energy, einstein_heat_capacity
from vibspec.analytic import AnalyticDensity, MarchenkoPastur
from vibspec.thermo import (
    DeltaDensity,
    ThermoPoint,
    consistency_check,
    curve_to_csv,
    mean_energy,
    mode_energy,
    mode_heat_capacity,
    omega_max,
    specific_heat,
    thermo_curve,
    zero_point_energy,
)


class TestModeFunctions:
    @given(st.floats(1e-3, 50.0), st.floats(1e-2, 100.0), st.floats(0.1, 3.0))
    def test_against_oracle(self, omega, beta, hbar):
        assume(beta * hbar * omega < 700)
        assert mode_energy(omega, beta, hbar) == pytest.approx(einstein_energy(omega, beta, hbar), rel=1e-12)
        ref = einstein_heat_capacity(omega, beta, hbar)
        assert mode_heat_capacity(omega, beta, hbar) == pytest.approx(ref, rel=1e-10, abs=1e-300)

    def test_limits(self):
        assert mode_energy(0.0, 2.0) == 0.5
        assert mode_heat_capacity(0.0, 2.0) == 1.0
        assert mode_heat_capacity(1e9, 1.0) == 0.0
        assert mode_energy(1e9, 1.0) == pytest.approx(0.5e9)


class TestEinstein:
    @pytest.mark.parametrize("beta", [0.01, 0.3, 1.0, 7.0, 40.0])
    def test_delta_density(self, beta):
        d = DeltaDensity(1.7)
        assert mean_energy(beta, d) == pytest.approx(einstein_energy(1.7, beta), rel=1e-13)
        assert specific_heat(beta, d) == pytest.approx(einstein_heat_capacity(1.7, beta), rel=1e-12)

    def test_frozen_is_exponential(self):
        # a gapped spectrum does freeze out exponentially
        d = DeltaDensity(1.0)
        assert specific_heat(50.0, d) < 50.0**2 * np.exp(-50.0) * 1.01

    def test_consistency(self):
        assert consistency_check([0.5, 2.0, 8.0], DeltaDensity(1.3)) < 1e-7


def independent_average(density, f):
    # integrate in omega on [0, omega_max] with the Jacobian 2 omega
    wmax = omega_max(density)
    g = lambda w: 2.0 * w * density.pdf(w * w) * f(w)
    val, _ = integrate.quad(g, 0.0, wmax, limit=400, epsabs=1e-13, epsrel=1e-11)
    return val


class TestContinuous:
    @pytest.mark.parametrize("mu", [0.5, 1.0, 10.0])
    @pytest.mark.parametrize("beta", [0.3, 3.0])
    def test_against_independent_quadrature(self, mu, beta):
        d = AnalyticDensity(mu)
        e_ref = independent_average(d, lambda w: einstein_energy(w, beta) if w > 0 else 1.0 / beta)
        c_ref = independent_average(d, lambda w: einstein_heat_capacity(w, beta) if w > 0 else 1.0)
        assert mean_energy(beta, d) == pytest.approx(e_ref, rel=1e-7)
        assert specific_heat(beta, d) == pytest.approx(c_ref, rel=1e-7)

    def test_zero_point_matches_mp(self):
        # MP with unit scale: <sqrt(x)> = 8 / (3 pi)
        assert zero_point_energy(MarchenkoPastur()) == pytest.approx(0.5 * 8 / (3 * np.pi), rel=1e-9)

    @pytest.mark.parametrize("mu", [0.5, 1.0, 10.0])
    def test_high_temperature(self, mu):
        d = AnalyticDensity(mu)
        b = 1e-3 / omega_max(d)
        assert b * mean_energy(b, d) == pytest.approx(1.0, abs=1e-5)
        assert specific_heat(b, d) == pytest.approx(1.0, abs=1e-6)

    def test_low_temperature_to_zero_point(self):
        d = AnalyticDensity(1.0)
        zpe = zero_point_energy(d)
        b = 1e5 / omega_max(d)
        assert mean_energy(b, d) == pytest.approx(zpe, rel=1e-6)

    def test_low_temperature_power_law(self):
        # a flat density in omega near zero gives c_V ~ (2 pi^2 / 3) c / beta
        d = AnalyticDensity(1.0)
        c = d.low_frequency_coefficient()
        b = 1e4 / omega_max(d)
        assert specific_heat(b, d) * b == pytest.approx(2 * np.pi**2 / 3 * c, rel=1e-3)

    @pytest.mark.parametrize("mu", [0.5, 10.0])
    def test_monotone_and_bounded(self, mu):
        d = AnalyticDensity(mu)
        betas = np.geomspace(1e-2, 1e3, 25) / omega_max(d)
        pts = thermo_curve(betas, d)
        cv = np.array([p.cv_per_mode for p in pts])
        thermal = np.array([p.energy_per_mode for p in pts]) - zero_point_energy(d)
        assert np.all((cv >= 0) & (cv <= 1))
        assert np.all(np.diff(cv) < 0)
        assert np.all(thermal >= 0) and np.all(np.diff(thermal) < 0)

    @pytest.mark.parametrize("mu", [1.0, 100.0])
    def test_consistency(self, mu):
        d = AnalyticDensity(mu)
        grid = np.geomspace(0.1, 100.0, 7) / omega_max(d)
        assert consistency_check(grid, d) < 1e-6

    def test_hbar_scaling(self):
        # c_V depends on beta and hbar only through beta hbar
        d = AnalyticDensity(0.5)
        assert specific_heat(2.0, d, hbar=3.0) == pytest.approx(specific_heat(6.0, d), rel=1e-10)


class TestValidation:
    @pytest.mark.parametrize("beta", [0.0, -1.0, np.inf, np.nan])
    def test_bad_beta(self, beta):
        with pytest.raises(ValueError):
            mean_energy(beta, DeltaDensity(1.0))
        with pytest.raises(ValueError):
            specific_heat(beta, DeltaDensity(1.0))

    def test_short_grid(self):
        with pytest.raises(ValueError):
            consistency_check([1.0, 2.0], DeltaDensity(1.0))


def test_csv():
    pts = [ThermoPoint(1.0, 1.0, 0.75, 0.9), ThermoPoint(2.0, 1.0, 0.6, 0.7)]
    text = curve_to_csv(pts, {"mu": 0.5})
    lines = text.splitlines()
    assert lines[0] == "# mu=0.5"
    assert lines[1] == "beta,energy_per_mode,cv_per_mode"
    rows = np.loadtxt(lines[2:], delimiter=",")
    np.testing.assert_array_equal(rows, [[1.0, 0.75, 0.9], [2.0, 0.6, 0.7]])
