import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vibspec.analytic import AnalyticDensity, MarchenkoPastur, upper_edge
from vibspec.eigensolve import MatrixPair, generalized_eigen
from vibspec.ensemble import ModelParams, sample_pair
from vibspec.pendulum import assemble, uniform_config
from vibspec.statistics import (
    DensityEstimate,
    EmptyOverlap,
    InsufficientData,
    Pendulum,
    RandomModel,
    SampleFailure,
    compare,
    edge_scale,
    fit_low_frequency,
    resolve_edges,
    run_ensemble,
    tabulate,
    transform_to_frequency,
)

SMALL = RandomModel(ModelParams(n=4, m0=0.5))


class TestDensityEstimate:
    @given(st.lists(st.floats(0.0, 100.0), min_size=1, max_size=300), st.integers(1, 80))
    def test_normalization_any_bins(self, values, bins):
        if max(values) == 0:
            values = [*values, 1.0]
        est = DensityEstimate.from_values(np.array(values), bins=bins)
        assert est.mass() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(est.bin_edges) > 0)

    def test_rejects_unsorted_edges(self):
        with pytest.raises(ValueError):
            DensityEstimate.from_counts([0.0, 2.0, 1.0], [1, 1], 2, 1)
        with pytest.raises(ValueError):
            resolve_edges([1.0])

    def test_default_binning(self):
        est = DensityEstimate.from_values(np.array([1.0, 2.0, 4.0]))
        assert est.heights.size == 200
        assert est.bin_edges[0] == 0.0 and est.bin_edges[-1] == pytest.approx(4.2)

    def test_pdf_cdf_ppf(self):
        est = DensityEstimate.from_counts([0.0, 1.0, 3.0], [2, 2], 4, 1)
        np.testing.assert_allclose(est.pdf([0.5, 2.0, 5.0]), [0.5, 0.25, 0.0])
        assert est.cdf(1.0) == pytest.approx(0.5)
        assert est.ppf(0.75) == pytest.approx(2.0)

    def test_roundtrips(self):
        est = run_ensemble(SMALL, 5, seed=2, bins=np.linspace(0, 20, 11)).density
        back = DensityEstimate.from_json(est.to_json())
        assert np.array_equal(back.bin_edges, est.bin_edges)
        assert np.array_equal(back.heights, est.heights)
        assert np.array_equal(back.counts, est.counts)
        csv = DensityEstimate.from_csv(est.to_csv())
        np.testing.assert_array_equal(csv.heights, est.heights)
        assert csv.samples == 5 and csv.total_eigenvalues == 20
        assert csv.metadata["seed"] == 2
        assert est.to_csv().splitlines()[0].startswith("# ")
        assert "bin_left,bin_right,height" in est.to_csv()

    def test_merge_halves(self):
        edges = np.linspace(0.0, 30.0, 31)
        full = run_ensemble(SMALL, 10, seed=3, bins=edges).density
        # the same sample indices split in two; counts add exactly
        first = run_ensemble(SMALL, 5, seed=3, bins=edges).density
        second = DensityEstimate.from_counts(
            edges,
            full.counts - first.counts,
            full.total_eigenvalues - first.total_eigenvalues,
            5,
        )
        merged = first.merge(second)
        assert np.array_equal(merged.counts, full.counts)
        assert np.array_equal(merged.heights, full.heights)
        with pytest.raises(ValueError):
            first.merge(DensityEstimate.from_counts(np.linspace(0, 1, 31), first.counts, 20, 5))


class TestRunEnsemble:
    def test_workers_identical(self):
        a = run_ensemble(SMALL, 1, seed=4, workers=1).density
        b = run_ensemble(SMALL, 1, seed=4, workers=8).density
        assert a.to_json() == b.to_json()

    def test_workers_identical_with_vectors(self):
        src = RandomModel(ModelParams(n=6, m0=0.5, field="real"))
        a = run_ensemble(src, 7, seed=5, workers=1, want_vectors=True, pbins=4)
        b = run_ensemble(src, 7, seed=5, workers=3, want_vectors=True, pbins=4)
        assert a.density.to_json() == b.density.to_json()
        assert np.array_equal(a.participation.p, b.participation.p)

    def test_explicit_edges_are_counts(self):
        res = run_ensemble(SMALL, 3, seed=1, bins=np.linspace(0, 50, 6))
        assert res.density.counts.dtype == np.int64
        assert res.density.counts.sum() <= 12
        assert res.density.total_eigenvalues == 12

    def test_matches_direct_solves(self):
        params = ModelParams(n=5, m0=0.5)
        w = np.concatenate([generalized_eigen(sample_pair(params, 9, i)).eigenvalues for i in range(4)])
        res = run_ensemble(RandomModel(params), 4, seed=9, keep_eigenvalues=True)
        np.testing.assert_array_equal(res.eigenvalues, w)

    def test_failure_carries_index(self):
        class Broken:
            def pair(self, seed, index):
                m = np.eye(2) if index != 2 else -np.eye(2)
                return MatrixPair(m, np.eye(2))

            def describe(self):
                return {}

        with pytest.raises(SampleFailure) as info:
            run_ensemble(Broken(), 4, seed=0)
        assert info.value.sample_index == 2

    def test_rejects_zero_samples(self):
        with pytest.raises(ValueError):
            run_ensemble(SMALL, 0, seed=1)

    def test_pendulum_scaled(self):
        src = Pendulum(uniform_config(64), scale_by_n2=True)
        res = run_ensemble(src, 1, seed=0, keep_eigenvalues=True)
        assert res.eigenvalues.max() < 4.0
        assert res.density.samples == 1

    def test_disordered_pendulum_varies_by_index(self):
        src = Pendulum(uniform_config(8), relative_spread=0.3)
        res = run_ensemble(src, 2, seed=1, keep_eigenvalues=True)
        assert not np.array_equal(res.eigenvalues[:8], res.eigenvalues[8:])


class TestTransform:
    def test_uniform_to_linear(self):
        edges = np.linspace(0.0, 1.0, 1001)
        est = DensityEstimate(edges, np.ones(1000), 1, 1)
        fr = transform_to_frequency(est)
        centers = fr.centers
        np.testing.assert_allclose(fr.heights, 2 * centers, rtol=1e-3, atol=1e-3)
        assert fr.mass() == pytest.approx(1.0, abs=1e-10)

    def test_analytic_plateau(self):
        d = AnalyticDensity(0.5)
        est = tabulate(d, np.geomspace(1e-12, d.support[1], 4000))
        fr = transform_to_frequency(est)
        c = d.low_frequency_coefficient()
        assert fr.heights[0] == pytest.approx(2 * c, rel=1e-3)
        assert fr.mass() == pytest.approx(est.mass(), abs=1e-10)

    def test_rejects_negative_axis(self):
        with pytest.raises(ValueError):
            transform_to_frequency(DensityEstimate(np.array([-1.0, 1.0]), np.array([0.5]), 1, 1))


class TestFit:
    def test_analytic(self):
        fit = fit_low_frequency(AnalyticDensity(0.5), (1e-6, 1e-4))
        assert fit.exponent == pytest.approx(-0.5, abs=0.005)
        assert fit.spectral_dimension == pytest.approx(1.0, abs=0.01)
        assert fit.coefficient == pytest.approx(AnalyticDensity(0.5).low_frequency_coefficient(), rel=1e-3)
        assert fit.window == (1e-6, 1e-4)
        assert np.isfinite(fit.exponent_stderr)

    def test_constant(self):
        edges = np.linspace(0.0, 1.0, 101)
        est = DensityEstimate(edges, np.ones(100), 100, 1)
        fit = fit_low_frequency(est, (0.05, 0.9))
        assert fit.exponent == pytest.approx(0.0, abs=1e-12)
        assert fit.spectral_dimension == pytest.approx(2.0)

    def test_callable_power_law(self):
        class Power:
            def pdf(self, x):
                return 3.0 * np.asarray(x) ** 0.7

        fit = fit_low_frequency(Power(), (1e-3, 1e-1))
        assert fit.exponent == pytest.approx(0.7, abs=1e-12)
        assert fit.coefficient == pytest.approx(3.0, rel=1e-10)

    def test_insufficient(self):
        est = DensityEstimate(np.linspace(0.0, 1.0, 11), np.ones(10), 10, 1)
        with pytest.raises(InsufficientData):
            fit_low_frequency(est, (0.01, 0.3))
        with pytest.raises(ValueError):
            fit_low_frequency(est, (0.5, 0.1))

    def test_pendulum_ensemble(self):
        src = Pendulum(uniform_config(256), relative_spread=0.3, scale_by_n2=True)
        est = run_ensemble(src, 40, seed=3, bins=np.geomspace(1e-5, 10.0, 61)).density
        fit = fit_low_frequency(est, (1e-3, 1e-1))
        assert fit.exponent == pytest.approx(-0.5, abs=0.1)


class TestCompare:
    def test_identity(self):
        est = run_ensemble(SMALL, 20, seed=1).density
        rep = compare(est, est)
        assert rep["ks"] < 1e-14 and rep["ks_bulk"] < 1e-14 and rep["sup_bulk"] < 1e-14
        assert all(abs(r["residual"]) < 1e-12 for r in rep["residuals"])
        json.dumps(rep)

    def test_disjoint(self):
        a = DensityEstimate(np.array([0.0, 1.0]), np.array([1.0]), 1, 1)
        b = DensityEstimate(np.array([2.0, 3.0]), np.array([1.0]), 1, 1)
        with pytest.raises(EmptyOverlap):
            compare(a, b)

    def test_tabulated_reference_is_exact(self):
        mp = MarchenkoPastur()
        est = tabulate(mp, np.linspace(0.0, 4.0, 81))
        rep = compare(est, mp)
        assert rep["ks"] < 1e-12
        assert rep["sup_bulk"] < 1e-12
        assert rep["bulk"][0] == pytest.approx(mp.ppf(0.05))

    def test_monte_carlo_small(self):
        params = ModelParams(n=128, m0=0.5)
        edges = np.linspace(0.0, 1.1 * upper_edge(0.5), 101)
        est = run_ensemble(RandomModel(params), 60, seed=1, bins=edges).density
        rep = compare(est, AnalyticDensity(0.5))
        assert rep["ks"] < 0.01

    def test_convergence_in_n(self):
        # equal eigenvalue budgets, so the drop is the finite-n bias, not noise
        edges = np.linspace(0.0, 1.1 * upper_edge(0.5), 101)
        ref = AnalyticDensity(0.5)
        ks = []
        for n, samples in ((512, 8), (2048, 2)):
            est = run_ensemble(RandomModel(ModelParams(n=n, m0=0.5)), samples, seed=2, bins=edges).density
            ks.append(compare(est, ref)["ks"])
        assert ks[1] < ks[0]


@pytest.mark.slow
def test_gravity_chain_sup_distance_to_marchenko_pastur():
    n = 4096
    w = generalized_eigen(assemble(uniform_config(n))).eigenvalues / n**2
    mp = MarchenkoPastur()
    est = DensityEstimate.from_values(w * edge_scale(w, mp.support[1]), bins=np.linspace(0.0, 4.0, 201))
    assert compare(est, mp)["sup_bulk"] <= 0.03
