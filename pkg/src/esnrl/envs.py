"""Seedable benchmark environments with controllable non-stationarity.

Two deterministic, desk-scale physics tasks:

* :class:`CartPoleWind` -- classic pole balancing with a continuous force
  action, plus a periodic lateral wind ``A * cos(omega * t)`` on the cart.
  Training uses amplitude 0; robustness sweeps raise it.
* :class:`FrictionSled` -- a 1-D driven body whose linear friction
  coefficient is abruptly scaled by a configurable factor mid-episode,
  modeling a sudden hardware change (a surface or bearing failure) that an
  adaptive controller must absorb without a reset.

Both integrate with semi-implicit Euler at a fixed step and are bit-exactly
reproducible from (config, seed, action sequence). Actions are 1-D in
[-1, 1].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .numerics import check_finite


@dataclass(frozen=True)
class EnvSpec:
    obs_dim: int
    act_dim: int
    act_low: np.ndarray
    act_high: np.ndarray
    max_steps: int

    def __post_init__(self):
        if self.obs_dim < 1 or self.act_dim < 1:
            raise ValueError("dimensions must be >= 1")
        if not np.all(np.asarray(self.act_low) < np.asarray(self.act_high)):
            raise ValueError("act_low must be < act_high componentwise")


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool
    truncated: bool


@dataclass(frozen=True)
class CartPoleWindConfig:
    gravity: float = 9.8            # m/s^2
    cart_mass: float = 1.0          # kg
    pole_mass: float = 0.1          # kg
    pole_half_length: float = 0.5   # m
    force_mag: float = 10.0         # N at |action| = 1
    tau: float = 0.02               # s per control step
    wind_amplitude: float = 0.0     # N
    wind_omega: float = 0.05        # rad per step
    max_steps: int = 1000

    def __post_init__(self):
        if min(self.gravity, self.cart_mass, self.pole_mass, self.pole_half_length, self.force_mag, self.tau) <= 0:
            raise ValueError("masses, lengths, gravity, force scale and tau must be positive")
        if self.wind_amplitude < 0:
            raise ValueError("wind amplitude must be >= 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class FrictionSledConfig:
    body_mass: float = 1.0          # kg
    drive_gain: float = 6.0         # N at |action| = 1
    base_friction: float = 0.5      # N s/m
    friction_multiplier: float = 1.0
    switch_step: int = 500
    quadratic_drag: float = 0.05    # N s^2/m^2
    tau: float = 0.02               # s per control step
    max_steps: int = 1000
    ctrl_cost: float = 0.1

    def __post_init__(self):
        if min(self.body_mass, self.drive_gain, self.base_friction, self.quadratic_drag, self.tau, self.ctrl_cost) <= 0:
            raise ValueError("physical parameters must be positive")
        if self.friction_multiplier < 1.0:
            raise ValueError(f"friction multiplier must be >= 1, got {self.friction_multiplier}")
        if not 0 <= self.switch_step < self.max_steps:
            raise ValueError("switch_step must lie inside the episode")


def wind_force(cfg: CartPoleWindConfig, t: float) -> float:
    """Lateral wind at (possibly fractional) step index ``t``."""
    return cfg.wind_amplitude * math.cos(cfg.wind_omega * t)


def effective_friction(cfg: FrictionSledConfig, t: int) -> float:
    """Linear friction coefficient in effect at step index ``t``."""
    return cfg.base_friction * (1.0 if t < cfg.switch_step else cfg.friction_multiplier)


class CartPoleWind:
    """Continuous-action cart-pole with periodic wind.

    State is (cart position, cart velocity, pole angle, pole angular
    velocity); the pole angle is measured from upright. The action is a
    horizontal force ``action * force_mag`` on the cart, to which the wind
    adds ``A * cos(omega * t)``. Reward is 1 per step; the episode ends
    when the pole passes 12 degrees or the cart leaves +/-2.4 m, and is
    truncated at ``max_steps``.

    The action is continuous (not the more common bang-bang variant)
    because the agents trained on it are continuous-control algorithms.
    """

    theta_threshold = 12.0 * math.pi / 180.0
    x_threshold = 2.4

    def __init__(self, cfg: CartPoleWindConfig = CartPoleWindConfig()):
        self.cfg = cfg
        self.state = np.zeros(4)
        self.t = 0

    @property
    def spec(self) -> EnvSpec:
        return EnvSpec(obs_dim=4, act_dim=1, act_low=np.array([-1.0]), act_high=np.array([1.0]), max_steps=self.cfg.max_steps)

    @property
    def obs_scale(self) -> np.ndarray:
        # Fixed normalization for reservoir/readout inputs: thresholds for
        # the bounded components, typical magnitudes for the velocities.
        return np.array([self.x_threshold, 3.0, self.theta_threshold, 3.0])

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state = rng.uniform(-0.05, 0.05, size=4)
        self.t = 0
        return self.state.copy()

    def step(self, action: np.ndarray | float) -> Transition:
        a = np.atleast_1d(np.asarray(action, dtype=np.float64))
        if a.shape != (1,):
            raise ValueError(f"action must be a single scalar, got shape {a.shape}")
        if not np.all(np.abs(a) <= 1.0 + 1e-12):
            raise ValueError(f"action {a} outside [-1, 1]")
        check_finite(self.state, "state")
        cfg = self.cfg
        s = self.state
        x, x_dot, theta, theta_dot = s

        force = float(a[0]) * cfg.force_mag + wind_force(cfg, self.t)
        total_mass = cfg.cart_mass + cfg.pole_mass
        pml = cfg.pole_mass * cfg.pole_half_length
        cos_t = math.cos(theta)
        sin_t = math.sin(theta)
        temp = (force + pml * theta_dot**2 * sin_t) / total_mass
        theta_acc = (cfg.gravity * sin_t - cos_t * temp) / (
            cfg.pole_half_length * (4.0 / 3.0 - cfg.pole_mass * cos_t**2 / total_mass)
        )
        x_acc = temp - pml * theta_acc * cos_t / total_mass

        # Semi-implicit Euler: velocities first, then positions with the
        # updated velocities (keeps the undriven system's energy bounded).
        x_dot = x_dot + cfg.tau * x_acc
        x = x + cfg.tau * x_dot
        theta_dot = theta_dot + cfg.tau * theta_acc
        theta = theta + cfg.tau * theta_dot

        s_next = np.array([x, x_dot, theta, theta_dot])
        self.state = s_next
        self.t += 1
        done = bool(abs(theta) > self.theta_threshold or abs(x) > self.x_threshold)
        truncated = bool(not done and self.t >= cfg.max_steps)
        return Transition(s=s.copy(), a=a, r=1.0, s_next=s_next.copy(), done=done, truncated=truncated)


class FrictionSled:
    """1-D driven body with a mid-episode friction switch.

    Observation is (velocity, last applied drive force, friction
    deceleration felt during the last step). The drive force is
    ``action * drive_gain``; it fights linear friction ``mu * v`` plus
    quadratic drag, where ``mu`` jumps by ``friction_multiplier`` at
    ``switch_step``. Reward is forward speed minus a quadratic control
    cost. The episode never terminates early, only truncates.
    """

    def __init__(self, cfg: FrictionSledConfig = FrictionSledConfig()):
        self.cfg = cfg
        self.state = np.zeros(3)
        self.t = 0

    @property
    def spec(self) -> EnvSpec:
        return EnvSpec(obs_dim=3, act_dim=1, act_low=np.array([-1.0]), act_high=np.array([1.0]), max_steps=self.cfg.max_steps)

    @property
    def obs_scale(self) -> np.ndarray:
        return np.array([10.0, self.cfg.drive_gain, 20.0])

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state = np.array([rng.uniform(-0.01, 0.01), 0.0, 0.0])
        self.t = 0
        return self.state.copy()

    def step(self, action: np.ndarray | float) -> Transition:
        a = np.atleast_1d(np.asarray(action, dtype=np.float64))
        if a.shape != (1,):
            raise ValueError(f"action must be a single scalar, got shape {a.shape}")
        if not np.all(np.abs(a) <= 1.0 + 1e-12):
            raise ValueError(f"action {a} outside [-1, 1]")
        check_finite(self.state, "state")
        cfg = self.cfg
        s = self.state
        v = s[0]

        mu = effective_friction(cfg, self.t)
        drive = float(a[0]) * cfg.drive_gain
        friction_decel = (mu * v + cfg.quadratic_drag * v * abs(v)) / cfg.body_mass
        acc = drive / cfg.body_mass - friction_decel
        v_new = v + cfg.tau * acc

        s_next = np.array([v_new, drive, friction_decel])
        self.state = s_next
        self.t += 1
        r = float(v_new - cfg.ctrl_cost * float(a[0]) ** 2)
        truncated = bool(self.t >= cfg.max_steps)
        return Transition(s=s.copy(), a=a, r=r, s_next=s_next.copy(), done=False, truncated=truncated)


def sled_terminal_velocity(cfg: FrictionSledConfig, action: float = 1.0, multiplier: float | None = None) -> float:
    """Steady-state speed under a constant action: the positive root of
    ``drive = mu v + drag v^2``."""
    mu = cfg.base_friction * (cfg.friction_multiplier if multiplier is None else multiplier)
    drive = action * cfg.drive_gain
    q = cfg.quadratic_drag
    return (-mu + math.sqrt(mu * mu + 4.0 * q * drive)) / (2.0 * q)


def cartpole_rule_action(obs: np.ndarray, rng: np.random.Generator, random_prob: float = 0.3) -> np.ndarray:
    """Noisy rule-based balancing policy: push toward the side the pole
    leans (sign of theta + 0.5 * theta_dot), replaced by a uniform random
    action on ``random_prob`` of steps. Used to collect long stationary
    trajectories for readout pretraining."""
    if rng.uniform() < random_prob:
        return rng.uniform(-1.0, 1.0, size=1)
    lean = obs[2] + 0.5 * obs[3]
    return np.array([1.0 if lean > 0 else -1.0])


def sled_rule_action(obs: np.ndarray, rng: np.random.Generator, random_prob: float = 0.3) -> np.ndarray:
    """Noisy constant-drive policy for the sled: full forward drive,
    replaced by a uniform random action on ``random_prob`` of steps. Keeps
    the body moving so the friction level stays observable."""
    if rng.uniform() < random_prob:
        return rng.uniform(-1.0, 1.0, size=1)
    return np.array([1.0])


def sled_probe_action(t: int, base: float = 0.7, amp: float = 0.25, period: float = 150.0) -> np.ndarray:
    """Deterministic slow-sinusoid drive used to probe readout adaptation.

    Persistently exciting but noise-free, like a trained policy evaluated
    deterministically: before a dynamics change the readout's weight
    updates decay toward zero, so a genuine change stands out instead of
    drowning in action noise."""
    return np.array([base + amp * math.sin(2.0 * math.pi * t / period)])


def make_env(name: str, cfg=None):
    """Factory used by the experiment harness: 'cartpole' or 'sled'."""
    if name == "cartpole":
        return CartPoleWind(cfg if cfg is not None else CartPoleWindConfig())
    if name == "sled":
        return FrictionSled(cfg if cfg is not None else FrictionSledConfig())
    raise ValueError(f"unknown environment '{name}' (expected 'cartpole' or 'sled')")


def write_trajectory_csv(path: str | Path, transitions: Sequence[Transition]) -> None:
    """Dump a trajectory as CSV with columns t, s..., a..., r, done."""
    transitions = list(transitions)
    if not transitions:
        raise ValueError("empty trajectory")
    obs_dim = len(transitions[0].s)
    act_dim = len(transitions[0].a)
    header = ["t"] + [f"s{i}" for i in range(obs_dim)] + [f"a{i}" for i in range(act_dim)] + ["r", "done"]
    with open(path, "w", newline="") as fh:
        fh.write("#schema=1\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, tr in enumerate(transitions):
            writer.writerow([t] + [repr(float(v)) for v in tr.s] + [repr(float(v)) for v in tr.a] + [repr(float(tr.r)), int(tr.done)])
