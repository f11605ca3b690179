import math
import numpy as np
import pytest

from esnrl.envs import (
    CartPoleWind,
    CartPoleWindConfig,
    FrictionSled,
    FrictionSledConfig,
    cartpole_rule_action,
    effective_friction,
    make_env,
    sled_rule_action,
    sled_terminal_velocity,
    wind_force,
    write_trajectory_csv,
)
from esnrl.numerics import make_rng
from esnrl.oracles import cartpole_reference_step


class TestCartPole:
    def test_reset_range_and_dim(self):
        env = CartPoleWind()
        rng = make_rng(0, 930)
        for _ in range(1000):
            s = env.reset(rng)
            assert s.shape == (4,)
            assert np.all(np.abs(s) <= 0.05)
        assert env.spec.obs_dim == 4

    def test_reset_deterministic(self):
        env = CartPoleWind()
        a = env.reset(make_rng(7, 931))
        b = CartPoleWind().reset(make_rng(7, 931))
        assert np.array_equal(a, b)

    def test_equilibrium_is_fixed_point(self):
        env = CartPoleWind()
        env.reset(make_rng(0, 932))
        env.state = np.zeros(4)
        tr = env.step(np.array([0.0]))
        assert np.array_equal(tr.s_next, np.zeros(4))
        assert tr.r == 1.0
        assert not tr.done

    def test_wind_at_t_zero_equals_amplitude(self):
        cfg = CartPoleWindConfig(wind_amplitude=5.0)
        assert wind_force(cfg, 0) == pytest.approx(5.0, abs=1e-15)

    def test_wind_periodicity(self):
        cfg = CartPoleWindConfig(wind_amplitude=3.0, wind_omega=0.05)
        period = 2.0 * math.pi / cfg.wind_omega
        for t in (0.0, 17.0, 123.4):
            assert wind_force(cfg, t) == pytest.approx(wind_force(cfg, t + period), abs=1e-12)

    def test_matches_reference_dynamics(self):
        cfg = CartPoleWindConfig()
        env = CartPoleWind(cfg)
        env.reset(make_rng(1, 933))
        env.state = np.zeros(4)
        expected = cartpole_reference_step(cfg, np.zeros(4), 1.0, 0)
        tr = env.step(np.array([1.0]))
        assert np.max(np.abs(tr.s_next - expected)) < 1e-12

    def test_termination_thresholds(self):
        env = CartPoleWind()
        env.reset(make_rng(2, 934))
        env.state = np.array([0.0, 0.0, 0.215, 0.0])  # beyond 12 degrees after step
        tr = env.step(np.array([0.0]))
        assert tr.done
        env.reset(make_rng(3, 934))
        env.state = np.array([2.45, 1.0, 0.0, 0.0])
        tr = env.step(np.array([0.0]))
        assert tr.done

    def test_truncation_at_max_steps(self):
        env = CartPoleWind(CartPoleWindConfig(max_steps=5))
        env.reset(make_rng(4, 935))
        env.state = np.zeros(4)
        for i in range(5):
            tr = env.step(np.array([0.0]))
        assert tr.truncated and not tr.done

    def test_action_bounds_checked(self):
        env = CartPoleWind()
        env.reset(make_rng(5, 936))
        with pytest.raises(ValueError):
            env.step(np.array([1.5]))

    def test_energy_drift_small_without_forcing(self):
        """Semi-implicit Euler keeps the undriven system's energy drift small."""
        cfg = CartPoleWindConfig()
        env = CartPoleWind(cfg)
        env.reset(make_rng(6, 937))
        env.state = np.array([0.0, 0.0, 0.05, 0.0])

        def energy(s):
            x, x_dot, theta, theta_dot = s
            m, length = cfg.pole_mass, cfg.pole_half_length
            total = cfg.cart_mass + m
            kinetic = 0.5 * total * x_dot**2 + m * length * x_dot * theta_dot * math.cos(theta) + (2.0 / 3.0) * m * length**2 * theta_dot**2
            potential = m * cfg.gravity * length * math.cos(theta)
            return kinetic + potential

        prev = energy(env.state)
        for _ in range(200):
            tr = env.step(np.array([0.0]))
            current = energy(tr.s_next)
            assert abs(current - prev) < 1e-3
            prev = current
            if tr.done:
                break

    def test_trajectory_determinism(self):
        cfg = CartPoleWindConfig(wind_amplitude=2.0)
        actions = make_rng(8, 938).uniform(-1, 1, size=(100, 1))

        def rollout():
            env = CartPoleWind(cfg)
            s = env.reset(make_rng(9, 939))
            states = [s]
            for a in actions:
                tr = env.step(a)
                states.append(tr.s_next)
                if tr.done:
                    break
            return np.array(states)

        assert np.array_equal(rollout(), rollout())


class TestSled:
    def test_reset(self):
        env = FrictionSled()
        rng = make_rng(0, 940)
        for _ in range(200):
            s = env.reset(rng)
            assert s.shape == (3,)
            assert abs(s[0]) <= 0.01
            assert s[1] == 0.0 and s[2] == 0.0
        assert env.spec.obs_dim == 3
        assert np.array_equal(env.reset(make_rng(1, 941)), FrictionSled().reset(make_rng(1, 941)))

    def test_rest_state_stays_at_rest(self):
        env = FrictionSled()
        env.reset(make_rng(2, 942))
        env.state = np.zeros(3)
        tr = env.step(np.array([0.0]))
        assert tr.s_next[0] == 0.0
        assert tr.r == 0.0

    def test_friction_switch_scales_exactly(self):
        cfg = FrictionSledConfig(friction_multiplier=10.0)
        assert effective_friction(cfg, 499) == pytest.approx(cfg.base_friction)
        assert effective_friction(cfg, 500) == pytest.approx(10.0 * cfg.base_friction)

    def test_terminal_velocity_matches_closed_form(self):
        cfg = FrictionSledConfig(max_steps=6000)
        env = FrictionSled(cfg)
        env.reset(make_rng(3, 943))
        env.state = np.zeros(3)
        for _ in range(5000):
            env.step(np.array([1.0]))
        expected = sled_terminal_velocity(cfg, action=1.0, multiplier=1.0)
        assert env.state[0] == pytest.approx(expected, abs=1e-6)

    def test_higher_friction_means_lower_terminal_velocity(self):
        def terminal(multiplier):
            cfg = FrictionSledConfig(max_steps=3000, friction_multiplier=multiplier, switch_step=0)
            env = FrictionSled(cfg)
            env.reset(make_rng(4, 944))
            env.state = np.zeros(3)
            for _ in range(2500):
                env.step(np.array([1.0]))
            return env.state[0]

        assert terminal(10.0) < terminal(1.0)

    def test_never_done_truncates(self):
        env = FrictionSled(FrictionSledConfig(max_steps=10, switch_step=5))
        env.reset(make_rng(5, 945))
        for i in range(10):
            tr = env.step(np.array([1.0]))
            assert not tr.done
        assert tr.truncated

    def test_observation_contents(self):
        env = FrictionSled()
        env.reset(make_rng(6, 946))
        env.state = np.array([2.0, 0.0, 0.0])
        tr = env.step(np.array([0.5]))
        cfg = env.cfg
        assert tr.s_next[1] == pytest.approx(0.5 * cfg.drive_gain)
        expected_decel = (cfg.base_friction * 2.0 + cfg.quadratic_drag * 4.0) / cfg.body_mass
        assert tr.s_next[2] == pytest.approx(expected_decel)


class TestConfigsAndHelpers:
    def test_invalid_configs(self):
        with pytest.raises(ValueError):
            CartPoleWindConfig(tau=0.0)
        with pytest.raises(ValueError):
            CartPoleWindConfig(wind_amplitude=-1.0)
        with pytest.raises(ValueError):
            FrictionSledConfig(friction_multiplier=0.5)
        with pytest.raises(ValueError):
            FrictionSledConfig(switch_step=2000)

    def test_make_env(self):
        assert isinstance(make_env("cartpole"), CartPoleWind)
        assert isinstance(make_env("sled"), FrictionSled)
        with pytest.raises(ValueError):
            make_env("mountaincar")

    def test_rule_policies_in_bounds(self):
        rng = make_rng(0, 947)
        for _ in range(200):
            a = cartpole_rule_action(rng.uniform(-1, 1, size=4), rng)
            assert a.shape == (1,) and abs(a[0]) <= 1.0
            a = sled_rule_action(rng.uniform(-1, 1, size=3), rng)
            assert a.shape == (1,) and abs(a[0]) <= 1.0

    def test_trajectory_csv(self, tmp_path):
        env = CartPoleWind()
        s = env.reset(make_rng(1, 948))
        transitions = []
        for _ in range(5):
            tr = env.step(np.array([0.3]))
            transitions.append(tr)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, transitions)
        lines = path.read_text().splitlines()
        assert lines[0] == "#schema=1"
        assert lines[1] == "t,s0,s1,s2,s3,a0,r,done"
        assert len(lines) == 7
