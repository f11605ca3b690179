import math

import numpy as np
import pytest

from esnrl.numerics import make_rng
from esnrl.oracles import dense_spectral_radius
from esnrl.reservoir import Reservoir, ReservoirConfig, build, load_reservoir, readout, save_reservoir


def small_reservoir(seed=0, n_x=40, n_u=4, **kw):
    return build(ReservoirConfig(n_x=n_x, n_u=n_u, seed=seed, **kw))


class TestBuild:
    def test_radius_and_zero_state(self):
        r = build(ReservoirConfig(n_x=300, n_u=4, rho=0.9, alpha=0.3, seed=7))
        assert dense_spectral_radius(r.w_res) == pytest.approx(0.9, abs=1e-6)
        assert np.all(r.x == 0.0)

    def test_configured_size(self):
        r = build(ReservoirConfig(n_x=500, n_u=17, seed=3))
        assert r.x.shape == (500,)
        assert r.w_in.shape == (500, 17)

    def test_deterministic_rebuild(self):
        cfg = ReservoirConfig(n_x=80, n_u=4, seed=11)
        a, b = build(cfg), build(cfg)
        assert np.array_equal(a.w_in, b.w_in)
        assert np.array_equal(a.w_res, b.w_res)

    def test_input_scale_bounds(self):
        r = build(ReservoirConfig(n_x=200, n_u=6, input_scale=0.25, seed=5))
        assert np.max(np.abs(r.w_in)) <= 0.25

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            ReservoirConfig(n_x=0, n_u=4)
        with pytest.raises(ValueError):
            ReservoirConfig(n_x=10, n_u=4, rho=1.0)
        with pytest.raises(ValueError):
            ReservoirConfig(n_x=10, n_u=4, alpha=0.0)


class TestUpdate:
    def test_zero_fixed_point(self):
        r = small_reservoir()
        out = r.update(np.zeros(4))
        assert np.all(out == 0.0)

    def test_scalar_hand_case(self):
        r = build(ReservoirConfig(n_x=1, n_u=1, rho=0.4, alpha=0.3, seed=0))
        r.w_in = np.array([[0.5]])
        r.w_res = np.array([[0.4]])
        r.x = np.array([0.2])
        out = r.update(np.array([1.0]))
        expected = 0.7 * 0.2 + 0.3 * math.tanh(0.5 * 1.0 + 0.4 * 0.2)
        assert out[0] == pytest.approx(expected, abs=1e-12)

    def test_alpha_one_no_leak(self):
        r = build(ReservoirConfig(n_x=30, n_u=4, alpha=1.0, seed=2))
        r.x = make_rng(0, 905).uniform(-0.5, 0.5, size=30)
        u = np.array([0.3, -0.1, 0.2, 0.0])
        expected = np.tanh(r.w_in @ u + r.w_res @ r.x)
        assert np.array_equal(r.update(u), expected)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            small_reservoir().update(np.zeros(5))

    def test_non_finite_input(self):
        with pytest.raises(ValueError):
            small_reservoir().update(np.array([np.nan, 0.0, 0.0, 0.0]))

    @pytest.mark.parametrize("seed", range(5))
    def test_boundedness(self, seed):
        r = small_reservoir(seed=seed)
        rng = make_rng(seed, 906)
        for _ in range(200):
            r.update(rng.uniform(-1.0, 1.0, size=4))
            assert np.max(np.abs(r.x)) < 1.0


class TestResetState:
    def test_reset_zeroes_state_only(self):
        r = small_reservoir()
        w_in, w_res = r.w_in.copy(), r.w_res.copy()
        rng = make_rng(1, 907)
        for _ in range(10):
            r.update(rng.uniform(-1, 1, size=4))
        r.reset_state()
        assert np.all(r.x == 0.0)
        r.reset_state()
        assert np.all(r.x == 0.0)
        assert np.array_equal(r.w_in, w_in)
        assert np.array_equal(r.w_res, w_res)

    def test_replay_reproduces_trajectory(self):
        r = small_reservoir(seed=4)
        inputs = make_rng(2, 908).uniform(-1, 1, size=(50, 4))
        first = [r.update(u).copy() for u in inputs]
        r.reset_state()
        second = [r.update(u).copy() for u in inputs]
        for a, b in zip(first, second):
            assert np.array_equal(a, b)


class TestReadout:
    def test_zero_weights(self):
        x = make_rng(0, 909).standard_normal(8)
        assert np.all(readout(np.zeros((3, 8)), x) == 0.0)

    def test_identity(self):
        x = make_rng(1, 909).standard_normal(5)
        assert np.array_equal(readout(np.eye(5), x), x)

    def test_hand_case(self):
        w = np.array([[1.0, 2.0, 3.0], [0.0, -1.0, 1.0]])
        assert np.array_equal(readout(w, np.array([1.0, 0.0, -1.0])), [-2.0, -1.0])


@pytest.mark.parametrize("n_x", [50, 300])
def test_echo_state_property(n_x):
    """States driven by the same inputs forget their initial conditions."""
    for seed in range(20):
        cfg = ReservoirConfig(n_x=n_x, n_u=3, rho=0.9, alpha=0.3, seed=seed)
        a = build(cfg)
        b = Reservoir(cfg, a.w_in, a.w_res)
        state_rng = make_rng(seed, 910)
        a.x = state_rng.uniform(-1, 1, size=n_x)
        b.x = state_rng.uniform(-1, 1, size=n_x)
        input_rng = make_rng(seed, 911)
        for _ in range(1000):
            u = input_rng.uniform(-1.0, 1.0, size=3)
            a.update(u)
            b.update(u)
        assert np.linalg.norm(a.x - b.x) < 1e-6


def test_serialization_round_trip(tmp_path):
    r = small_reservoir(seed=9)
    path = tmp_path / "reservoir.json"
    save_reservoir(path, r)
    loaded = load_reservoir(path)
    assert loaded.cfg == r.cfg
    assert np.array_equal(loaded.w_in, r.w_in)
    assert np.array_equal(loaded.w_res, r.w_res)
    assert np.all(loaded.x == 0.0)
