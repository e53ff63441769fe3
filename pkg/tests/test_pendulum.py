import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import pendulum_matrices_loops, two_segment_frequencies
from vibspec.eigensolve import generalized_eigen
from vibspec.pendulum import (
    MAX_SPREAD,
    PendulumConfig,
    assemble,
    coulomb_matrix,
    disordered_config,
    uniform_config,
)


def random_config(rng, n, charged=True):
    charges = rng.uniform(0.0, 2.0, n + 1) if charged else np.zeros(n + 1)
    return PendulumConfig(n, rng.uniform(0.2, 2.0, n), rng.uniform(0.2, 2.0, n), charges, rng.uniform(0.1, 3.0))


@st.composite
def configs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pos = st.floats(0.1, 5.0)
    lengths = draw(st.lists(pos, min_size=n, max_size=n))
    masses = draw(st.lists(pos, min_size=n, max_size=n))
    charges = draw(st.lists(st.floats(0.0, 3.0), min_size=n + 1, max_size=n + 1))
    gravity = draw(st.floats(0.1, 20.0))
    return PendulumConfig(n, lengths, masses, charges, gravity)


class TestUniformConfig:
    def test_large_n_charge_scaling(self):
        cfg = uniform_config(16384, 1.0, 1.0, 1.0, 1.0)
        assert np.allclose(cfg.lengths, 1 / 16384, rtol=0, atol=0)
        assert np.allclose(cfg.masses, 1 / 16384, rtol=0, atol=0)
        assert cfg.charges.shape == (16385,)
        assert cfg.charges[0] == pytest.approx(1 / (16384 * math.sqrt(math.log(16384))), rel=1e-15)

    def test_plain_division(self):
        cfg = uniform_config(4, 2.0, 2.0, 0.0, 9.8)
        assert np.all(cfg.lengths == 0.5) and np.all(cfg.masses == 0.5)
        assert np.all(cfg.charges == 0.0)
        assert cfg.gravity == 9.8

    def test_single_segment_charged_rejected(self):
        with pytest.raises(ValueError):
            uniform_config(1, charge_scale=1.0)

    @pytest.mark.parametrize("n", [0, -3])
    def test_bad_n(self, n):
        with pytest.raises(ValueError):
            uniform_config(n)


class TestValidation:
    def test_no_restoring_force(self):
        with pytest.raises(ValueError, match="restoring"):
            PendulumConfig(3, np.ones(3), np.ones(3), np.zeros(4), 0.0)

    def test_coulomb_only_is_fine(self):
        PendulumConfig(3, np.ones(3), np.ones(3), np.ones(4), 0.0)

    @pytest.mark.parametrize(
        "field,value",
        [("lengths", [1.0, -1.0]), ("masses", [1.0, 0.0]), ("charges", [1.0, -0.1, 1.0])],
    )
    def test_sign_checks(self, field, value):
        kw = dict(n=2, lengths=[1.0, 1.0], masses=[1.0, 1.0], charges=[0.0, 0.0, 0.0], gravity=1.0)
        kw[field] = value
        with pytest.raises(ValueError):
            PendulumConfig(**kw)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            PendulumConfig(2, [1.0], [1.0, 1.0], [0, 0, 0], 1.0)

    def test_json_roundtrip(self):
        cfg = random_config(np.random.default_rng(3), 5)
        back = PendulumConfig.from_json(cfg.to_json())
        assert np.array_equal(back.lengths, cfg.lengths)
        assert np.array_equal(back.charges, cfg.charges)
        assert back.gravity == cfg.gravity

    def test_from_dict_missing_key(self):
        with pytest.raises(ValueError, match="missing"):
            PendulumConfig.from_dict({"n": 2})


class TestDisorder:
    def test_zero_spread_copies(self):
        base = uniform_config(8, charge_scale=1.0)
        out = disordered_config(base, 0.0, seed=1)
        assert out is not base
        assert np.array_equal(out.lengths, base.lengths)
        assert np.array_equal(out.charges, base.charges)

    def test_deterministic(self):
        base = uniform_config(8, charge_scale=1.0)
        a = disordered_config(base, 0.3, seed=7)
        b = disordered_config(base, 0.3, seed=7)
        assert np.array_equal(a.lengths, b.lengths) and np.array_equal(a.masses, b.masses)
        c = disordered_config(base, 0.3, seed=7, index=1)
        assert not np.array_equal(a.lengths, c.lengths)

    def test_moments(self):
        # 1e5 draws per parameter family; independent estimators of mean and spread
        base = PendulumConfig(
            100000, np.full(100000, 2.0), np.full(100000, 0.5), np.full(100001, 3.0), 1.0
        )
        out = disordered_config(base, 0.3, seed=7)
        for arr, mean in ((out.lengths, 2.0), (out.masses, 0.5), (out.charges, 3.0)):
            assert abs(np.mean(arr) / mean - 1) < 0.01
            assert abs(np.std(arr) / mean - 0.3) < 0.01
            assert np.all(arr > 0)

    def test_spread_limit(self):
        base = uniform_config(4)
        with pytest.raises(ValueError):
            disordered_config(base, MAX_SPREAD, seed=0)
        with pytest.raises(ValueError):
            disordered_config(base, -0.1, seed=0)


class TestAssemble:
    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(11)
        for n in (1, 2, 3, 7, 12):
            cfg = random_config(rng, n)
            M0, K0, U0 = pendulum_matrices_loops(cfg.lengths, cfg.masses, cfg.charges, cfg.gravity)
            pair = assemble(cfg)
            np.testing.assert_allclose(pair.mass, M0, rtol=1e-13, atol=0)
            np.testing.assert_allclose(pair.stiffness, K0, rtol=1e-12, atol=1e-12 * np.abs(K0).max())
            if n > 1:
                np.testing.assert_allclose(coulomb_matrix(cfg), U0, rtol=1e-12, atol=1e-12 * np.abs(U0).max())

    def test_two_segments(self):
        for l, g in ((1.0, 9.81), (0.25, 1.0), (3.0, 2.5)):
            cfg = PendulumConfig(2, [l, l], [1.3, 1.3], [0, 0, 0], g)
            w = generalized_eigen(assemble(cfg)).eigenvalues
            np.testing.assert_allclose(w, two_segment_frequencies(l, g), rtol=1e-12)

    def test_single_segment(self):
        cfg = PendulumConfig(1, [2.0], [5.0], [0, 0], 9.0)
        assert generalized_eigen(assemble(cfg)).eigenvalues[0] == pytest.approx(4.5, rel=1e-14)

    def test_coulomb_only_has_translation_mode(self):
        rng = np.random.default_rng(5)
        cfg = random_config(rng, 10)
        U = coulomb_matrix(cfg)
        w = np.linalg.eigvalsh(U)
        assert abs(w[0]) < 1e-12 * w[-1]
        assert w[1] > 0

    def test_large_n_is_fast_path(self):
        cfg = uniform_config(600, charge_scale=1.0)
        U = coulomb_matrix(cfg)
        assert np.allclose(U, U.T)
        assert np.max(np.abs(U.sum(axis=1))) <= 1e-12 * np.max(np.abs(U))

    @given(configs())
    def test_properties(self, cfg):
        pair = assemble(cfg)
        M, K = pair.mass, pair.stiffness
        assert np.array_equal(M, M.T)
        np.testing.assert_allclose(K, K.T, rtol=0, atol=1e-12 * max(1.0, np.abs(K).max()))
        assert np.linalg.eigvalsh(M)[0] > 0
        assert np.linalg.eigvalsh(K)[0] > -1e-10 * np.abs(K).max()
        if cfg.n > 1 and np.any(cfg.charges[:-1] > 0) and np.any(cfg.charges[1:] > 0):
            U = coulomb_matrix(cfg)
            rows = np.linalg.norm(U, axis=1)
            assert np.all(np.abs(U.sum(axis=1)) <= 1e-12 * np.maximum(rows, 1e-300) + 1e-300)

    @given(configs(max_n=6))
    def test_gravity_scales_spectrum(self, cfg):
        # without charges the spectrum is linear in g
        base = PendulumConfig(cfg.n, cfg.lengths, cfg.masses, np.zeros(cfg.n + 1), cfg.gravity)
        twice = PendulumConfig(cfg.n, cfg.lengths, cfg.masses, np.zeros(cfg.n + 1), 2 * cfg.gravity)
        w1 = generalized_eigen(assemble(base)).eigenvalues
        w2 = generalized_eigen(assemble(twice)).eigenvalues
        np.testing.assert_allclose(w2, 2 * w1, rtol=1e-9)
