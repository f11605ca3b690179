"""Soft actor-critic agent and its training loops.

A tanh-Gaussian actor, twin critics with Polyak-averaged targets, and an
auto-tuned entropy temperature, all over small MLPs differentiated by the
tape in :mod:`esnrl.autodiff`. Batches, target computation and action
selection run on plain numpy; only the three loss graphs are taped.

Each network keeps its parameters in one flat float64 buffer (layer arrays
are views into it), so optimizer steps and Polyak averaging are single
vectorized operations, and the twin critics are stored interleaved so both
evaluate through one stacked matmul chain.

The adaptive variants feed the policy an augmented state: the raw
observation concatenated with the reservoir readout's next-observation
prediction. Replay stores augmented states exactly as the policy saw them
at collection time; stale predictions are not recomputed when sampled
later, so the critic learns on the same inputs the actor acted from.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import autodiff as ad
from .adapt import RlsReadout
from .envs import make_env
from .metrics import EpisodeLog
from .numerics import make_rng
from .reservoir import Reservoir

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

# Seed substreams; a trial's seed plus these labels determines every draw.
STREAM_NET = 20
STREAM_ENV = 21
STREAM_ACT = 22
STREAM_UPDATE = 23
STREAM_REPLAY = 24
STREAM_DR = 25


@dataclass(frozen=True)
class SacConfig:
    hidden_sizes: tuple = (64, 64)
    lr: float = 3e-4
    gamma: float = 0.99
    tau_polyak: float = 0.005
    batch_size: int = 256
    replay_capacity: int = 200_000
    init_temperature: float = 1.0
    target_entropy: float | None = None  # defaults to -act_dim when the agent is built
    warmup_steps: int = 1000

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0.0 < self.tau_polyak <= 1.0:
            raise ValueError(f"tau_polyak must lie in (0, 1], got {self.tau_polyak}")
        if self.lr <= 0.0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.init_temperature <= 0.0:
            raise ValueError(f"init_temperature must be positive, got {self.init_temperature}")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ValueError("need replay_capacity >= batch_size >= 1")


def _layer_shapes(sizes: tuple) -> list[tuple]:
    return [(fan_in, fan_out) for fan_in, fan_out in zip(sizes[:-1], sizes[1:])]


def _check_activations(sizes: tuple, activations: tuple) -> None:
    if len(activations) != len(sizes) - 1:
        raise ValueError("need one activation tag per layer")
    for act in activations:
        if act not in ("tanh", "relu", "linear"):
            raise ValueError(f"unknown activation '{act}'")


class Mlp:
    """Fully-connected network; weights are (fan_in, fan_out) views into a
    single flat parameter buffer."""

    def __init__(self, sizes: tuple, activations: tuple, rng: np.random.Generator | None = None):
        _check_activations(sizes, activations)
        self.sizes = tuple(sizes)
        self.activations = tuple(activations)
        shapes = _layer_shapes(self.sizes)
        self.flat = np.zeros(sum(i * o + o for i, o in shapes))
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        offset = 0
        for fan_in, fan_out in shapes:
            w = self.flat[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
            offset += fan_in * fan_out
            b = self.flat[offset : offset + fan_out]
            offset += fan_out
            if rng is not None:
                bound = 1.0 / math.sqrt(fan_in)
                w[...] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
                b[...] = rng.uniform(-bound, bound, size=fan_out)
            self.weights.append(w)
            self.biases.append(b)

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            h = h @ w + b
            if act == "tanh":
                h = np.tanh(h)
            elif act == "relu":
                h = np.maximum(h, 0.0)
        return h

    def forward_var(self, x: ad.Var, params: list[ad.Var]) -> ad.Var:
        h = x
        for i, act in enumerate(self.activations):
            h = ad.add(ad.matmul(h, params[2 * i]), params[2 * i + 1])
            if act == "tanh":
                h = ad.tanh(h)
            elif act == "relu":
                h = ad.relu(h)
        return h

    def wrap_params(self, requires: bool = True) -> list[ad.Var]:
        return [ad.Var(p, requires=requires) for p in self.params()]

    def clone(self) -> "Mlp":
        m = Mlp(self.sizes, self.activations)
        m.flat[...] = self.flat
        return m


class TwinMlp:
    """Two same-shape MLPs stored interleaved: layer ``l`` holds stacked
    weights (2, fan_in, fan_out) and biases (2, 1, fan_out), so one matmul
    chain evaluates both networks on a shared input."""

    def __init__(self, sizes: tuple, activations: tuple, rng_a: np.random.Generator | None = None, rng_b: np.random.Generator | None = None):
        _check_activations(sizes, activations)
        self.sizes = tuple(sizes)
        self.activations = tuple(activations)
        shapes = _layer_shapes(self.sizes)
        self.flat = np.zeros(2 * sum(i * o + o for i, o in shapes))
        self.weights: list[np.ndarray] = []  # each (2, fan_in, fan_out)
        self.biases: list[np.ndarray] = []  # each (2, 1, fan_out)
        offset = 0
        for fan_in, fan_out in shapes:
            w = self.flat[offset : offset + 2 * fan_in * fan_out].reshape(2, fan_in, fan_out)
            offset += 2 * fan_in * fan_out
            b = self.flat[offset : offset + 2 * fan_out].reshape(2, 1, fan_out)
            offset += 2 * fan_out
            for i, rng in enumerate((rng_a, rng_b)):
                if rng is not None:
                    bound = 1.0 / math.sqrt(fan_in)
                    w[i] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
                    b[i, 0] = rng.uniform(-bound, bound, size=fan_out)
            self.weights.append(w)
            self.biases.append(b)

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def net_params(self, i: int) -> list[np.ndarray]:
        """Parameter views of one of the two networks (weights then bias per
        layer, bias squeezed to 1-D)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w[i])
            out.append(b[i, 0])
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate both networks on ``x`` (B, in); returns (2, B, out)."""
        h = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            h = h @ w + b
            if act == "tanh":
                h = np.tanh(h)
            elif act == "relu":
                h = np.maximum(h, 0.0)
        return h

    def forward_var(self, x: ad.Var, params: list[ad.Var]) -> ad.Var:
        h = x
        for i, act in enumerate(self.activations):
            h = ad.add(ad.matmul(h, params[2 * i]), params[2 * i + 1])
            if act == "tanh":
                h = ad.tanh(h)
            elif act == "relu":
                h = ad.relu(h)
        return h

    def wrap_params(self, requires: bool = True) -> list[ad.Var]:
        return [ad.Var(p, requires=requires) for p in self.params()]

    def clone(self) -> "TwinMlp":
        m = TwinMlp(self.sizes, self.activations)
        m.flat[...] = self.flat
        return m


class ReplayBuffer:
    """Fixed-capacity ring buffer over preallocated float64 arrays."""

    def __init__(self, capacity: int, state_dim: int, act_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, act_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)
        self.pos = 0
        self.size = 0

    def push(self, s, a, r, s_next, done) -> None:
        i = self.pos
        self.states[i] = s
        self.actions[i] = a
        self.rewards[i] = r
        self.next_states[i] = s_next
        self.dones[i] = float(done)
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=batch_size)
        return (
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx],
            self.dones[idx],
        )

    def __len__(self) -> int:
        return self.size


def augment(s: np.ndarray, s_hat_next: np.ndarray) -> np.ndarray:
    """Policy input: raw observation followed by the next-state prediction."""
    s = np.asarray(s, dtype=np.float64)
    s_hat_next = np.asarray(s_hat_next, dtype=np.float64)
    if s.shape != s_hat_next.shape:
        raise ValueError(f"observation {s.shape} and prediction {s_hat_next.shape} must have equal length")
    return np.concatenate([s, s_hat_next])


class SacAgent:
    """Twin-critic SAC with auto-tuned temperature over tape-differentiated MLPs."""

    def __init__(
        self,
        input_dim: int,
        act_dim: int,
        cfg: SacConfig,
        act_low: np.ndarray,
        act_high: np.ndarray,
        seed: int,
    ):
        self.cfg = cfg
        self.input_dim = input_dim
        self.act_dim = act_dim
        self.act_low = np.asarray(act_low, dtype=np.float64)
        self.act_high = np.asarray(act_high, dtype=np.float64)
        self.act_center = 0.5 * (self.act_low + self.act_high)
        self.act_half = 0.5 * (self.act_high - self.act_low)
        hidden = tuple(cfg.hidden_sizes)
        acts = ("relu",) * len(hidden) + ("linear",)
        self.actor = Mlp((input_dim, *hidden, 2 * act_dim), acts, make_rng(seed, STREAM_NET, 0))
        self.critics = TwinMlp((input_dim + act_dim, *hidden, 1), acts, make_rng(seed, STREAM_NET, 1), make_rng(seed, STREAM_NET, 2))
        self.targets = self.critics.clone()
        self.log_temperature = np.array(math.log(cfg.init_temperature))
        self.target_entropy = float(cfg.target_entropy) if cfg.target_entropy is not None else -float(act_dim)
        self.replay = ReplayBuffer(cfg.replay_capacity, input_dim, act_dim)
        self.opt_actor = ad.Adam([self.actor.flat], cfg.lr)
        self.opt_critic = ad.Adam([self.critics.flat], cfg.lr)
        self.opt_temperature = ad.Adam([self.log_temperature], cfg.lr)
        self._update_rng = make_rng(seed, STREAM_UPDATE)
        self._replay_rng = make_rng(seed, STREAM_REPLAY)
        self.updates_done = 0

    # Per-network parameter views, for inspection and gradient checking.
    @property
    def critic1_params(self) -> list[np.ndarray]:
        return self.critics.net_params(0)

    @property
    def critic2_params(self) -> list[np.ndarray]:
        return self.critics.net_params(1)

    # -- acting ---------------------------------------------------------

    def _actor_stats(self, states: np.ndarray):
        out = self.actor.forward(states)
        mean = out[:, : self.act_dim]
        raw = out[:, self.act_dim :]
        log_std = LOG_STD_MIN + 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (np.tanh(raw) + 1.0)
        return mean, log_std

    def act(self, s_tilde: np.ndarray, deterministic: bool, rng: np.random.Generator | None = None) -> np.ndarray:
        s_tilde = np.asarray(s_tilde, dtype=np.float64)
        if s_tilde.shape != (self.input_dim,):
            raise ValueError(f"policy input must have length {self.input_dim}, got {s_tilde.shape}")
        mean, log_std = self._actor_stats(s_tilde[None, :])
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(log_std)):
            raise RuntimeError("actor produced non-finite outputs")
        if deterministic:
            z = mean[0]
        else:
            if rng is None:
                raise ValueError("stochastic action selection needs an rng")
            z = mean[0] + np.exp(log_std[0]) * rng.standard_normal(self.act_dim)
        return self.act_center + self.act_half * np.tanh(z)

    def _squash_logp(self, eps: np.ndarray, log_std: np.ndarray, z: np.ndarray) -> np.ndarray:
        # log pi(a) for a = center + half * tanh(z), z = mean + std * eps:
        # Gaussian term minus the tanh and range change-of-variable terms.
        base = -0.5 * eps**2 - log_std - 0.5 * math.log(2.0 * math.pi)
        squash = 2.0 * (math.log(2.0) - z - np.logaddexp(0.0, -2.0 * z))
        return (base - squash - np.log(self.act_half)).sum(axis=1)

    # -- losses ----------------------------------------------------------

    def critic_targets(self, r, s_next, done, eps_next: np.ndarray) -> np.ndarray:
        mean, log_std = self._actor_stats(s_next)
        z = mean + np.exp(log_std) * eps_next
        a_next = self.act_center + self.act_half * np.tanh(z)
        logp = self._squash_logp(eps_next, log_std, z)
        q_in = np.concatenate([s_next, a_next], axis=1)
        q_pair = self.targets.forward(q_in)
        q_min = np.minimum(q_pair[0, :, 0], q_pair[1, :, 0])
        alpha = float(np.exp(self.log_temperature))
        return r + self.cfg.gamma * (1.0 - done) * (q_min - alpha * logp)

    def critic_loss_and_grads(self, s, a, y):
        """Sum of the two critics' MSE losses against the fixed target ``y``
        and its gradients, ordered [critic1 params..., critic2 params...]."""
        sa = ad.constant(np.concatenate([s, a], axis=1))
        yv = ad.constant(y[None, :, None])
        params = self.critics.wrap_params()
        q_pair = self.critics.forward_var(sa, params)  # (2, B, 1)
        # mean over (2, B, 1) is half the sum of the two per-critic MSEs.
        loss = ad.scale(ad.mean_all(ad.square(ad.sub(q_pair, yv))), 2.0)
        ad.backward(loss)
        grads = []
        for i in (0, 1):
            for j, p in enumerate(params):
                g = p.grad if p.grad is not None else np.zeros_like(p.value)
                # Biases are stored (2, 1, out); expose per-net grads as (out,).
                grads.append(g[i, 0] if j % 2 == 1 else g[i])
        return float(loss.value), grads

    def _critic_flat_grad(self, s, a, y):
        sa = ad.constant(np.concatenate([s, a], axis=1))
        yv = ad.constant(y[None, :, None])
        params = self.critics.wrap_params()
        q_pair = self.critics.forward_var(sa, params)
        loss = ad.scale(ad.mean_all(ad.square(ad.sub(q_pair, yv))), 2.0)
        ad.backward(loss)
        flat = np.concatenate([p.grad.ravel() for p in params])
        return float(loss.value), flat

    def actor_loss_and_grads(self, s, eps: np.ndarray, alpha: float):
        loss, params, logp = self._actor_loss(s, eps, alpha)
        grads = [p.grad if p.grad is not None else np.zeros_like(p.value) for p in params]
        return float(loss.value), grads, logp.value

    def _actor_loss(self, s, eps: np.ndarray, alpha: float):
        sv = ad.constant(s)
        params = self.actor.wrap_params()
        out = self.actor.forward_var(sv, params)
        mean = ad.slice_cols(out, 0, self.act_dim)
        raw = ad.slice_cols(out, self.act_dim, 2 * self.act_dim)
        half_span = 0.5 * (LOG_STD_MAX - LOG_STD_MIN)
        log_std = ad.shift(ad.scale(ad.tanh(raw), half_span), LOG_STD_MIN + half_span)
        z = ad.add(mean, ad.mul(ad.exp(log_std), ad.constant(eps)))
        squashed = ad.tanh(z)
        a_new = ad.add(ad.mul(squashed, ad.constant(self.act_half)), ad.constant(self.act_center))

        const_terms = ad.constant(-0.5 * eps**2 - 0.5 * math.log(2.0 * math.pi) - np.log(self.act_half) - 2.0 * math.log(2.0))
        tanh_corr = ad.scale(ad.sub(ad.neg(z), ad.softplus(ad.scale(z, -2.0))), 2.0)
        logp = ad.sum_rows(ad.sub(ad.sub(const_terms, log_std), tanh_corr))

        sa = ad.concat_cols(sv, a_new)
        q_pair = self.critics.forward_var(sa, self.critics.wrap_params(requires=False))  # (2, B, 1)
        q_min = ad.sum_rows(ad.minimum(ad.take_first(q_pair, 0), ad.take_first(q_pair, 1)))
        loss = ad.mean_all(ad.sub(ad.scale(logp, alpha), q_min))
        ad.backward(loss)
        return loss, params, logp

    def temperature_loss_and_grad(self, logp: np.ndarray):
        # loss(log_alpha) = -log_alpha * mean(logp + target_entropy); linear,
        # so the gradient is the negated mean itself.
        err = float(np.mean(logp + self.target_entropy))
        return -float(self.log_temperature) * err, -err

    def sac_update(self, batch=None) -> dict:
        """One optimization step on critics, actor and temperature, then a
        Polyak update of the target networks. Returns the three loss values."""
        if batch is None:
            if len(self.replay) < self.cfg.batch_size:
                raise ValueError(f"replay holds {len(self.replay)} < batch_size={self.cfg.batch_size} transitions")
            batch = self.replay.sample(self.cfg.batch_size, self._replay_rng)
        s, a, r, s_next, done = batch
        n = s.shape[0]

        eps_next = self._update_rng.standard_normal((n, self.act_dim))
        y = self.critic_targets(r, s_next, done, eps_next)
        critic_loss, critic_grad = self._critic_flat_grad(s, a, y)
        self.opt_critic.step([critic_grad])

        alpha = float(np.exp(self.log_temperature))
        eps = self._update_rng.standard_normal((n, self.act_dim))
        loss_var, params, logp_var = self._actor_loss(s, eps, alpha)
        actor_loss = float(loss_var.value)
        logp = logp_var.value
        self.opt_actor.step([np.concatenate([p.grad.ravel() for p in params])])

        temperature_loss, temp_grad = self.temperature_loss_and_grad(logp)
        self.opt_temperature.step([np.asarray(temp_grad)])

        losses = {"critic_loss": critic_loss, "actor_loss": actor_loss, "temperature_loss": temperature_loss}
        if not all(np.isfinite(v) for v in losses.values()):
            raise RuntimeError(f"non-finite loss at update {self.updates_done}: {losses}")
        self.polyak_update()
        self.updates_done += 1
        return losses

    def polyak_update(self, tau: float | None = None) -> None:
        tau = self.cfg.tau_polyak if tau is None else tau
        self.targets.flat *= 1.0 - tau
        self.targets.flat += tau * self.critics.flat

    # -- persistence ------------------------------------------------------

    def state_dict(self) -> dict:
        def net(params: list[np.ndarray]) -> dict:
            return {"weights": [p.tolist() for p in params[0::2]], "biases": [p.tolist() for p in params[1::2]]}

        return {
            "input_dim": self.input_dim,
            "act_dim": self.act_dim,
            "act_low": self.act_low.tolist(),
            "act_high": self.act_high.tolist(),
            "actor": net(self.actor.params()),
            "critic1": net(self.critics.net_params(0)),
            "critic2": net(self.critics.net_params(1)),
            "target1": net(self.targets.net_params(0)),
            "target2": net(self.targets.net_params(1)),
            "log_temperature": float(self.log_temperature),
            "target_entropy": self.target_entropy,
            "opt_actor": self.opt_actor.state(),
            "opt_critic": self.opt_critic.state(),
            "opt_temperature": self.opt_temperature.state(),
            "updates_done": self.updates_done,
        }

    def load_state_dict(self, state: dict) -> None:
        def fill(params: list[np.ndarray], saved: dict) -> None:
            for w, sw in zip(params[0::2], saved["weights"]):
                w[...] = np.array(sw)
            for b, sb in zip(params[1::2], saved["biases"]):
                b[...] = np.array(sb)

        fill(self.actor.params(), state["actor"])
        fill(self.critics.net_params(0), state["critic1"])
        fill(self.critics.net_params(1), state["critic2"])
        fill(self.targets.net_params(0), state["target1"])
        fill(self.targets.net_params(1), state["target2"])
        self.log_temperature[...] = state["log_temperature"]
        self.target_entropy = float(state["target_entropy"])
        self.opt_actor.load_state(state["opt_actor"])
        self.opt_critic.load_state(state["opt_critic"])
        self.opt_temperature.load_state(state["opt_temperature"])
        self.updates_done = int(state["updates_done"])


class EsnPipeline:
    """Reservoir + readout wiring shared by training and evaluation.

    Normalizes observations by the environment's fixed scale before they
    enter the reservoir, predicts the next observation in normalized space,
    and de-normalizes it for the policy's augmented input. Optionally
    appends the previous action to the reservoir input.
    """

    def __init__(self, reservoir: Reservoir, rls: RlsReadout, obs_scale: np.ndarray, include_action: bool = False, act_dim: int = 1):
        self.reservoir = reservoir
        self.rls = rls
        self.obs_scale = np.asarray(obs_scale, dtype=np.float64)
        self.include_action = include_action
        self.act_dim = act_dim
        self.last_x: np.ndarray | None = None
        self.last_action = np.zeros(act_dim)

    def start_episode(self, carry_state: bool = False) -> None:
        if not carry_state:
            self.reservoir.reset_state()
        self.last_x = None
        self.last_action = np.zeros(self.act_dim)

    def observe(self, s: np.ndarray) -> np.ndarray:
        """Advance the reservoir with ``s`` and return the augmented state."""
        u = s / self.obs_scale
        if self.include_action:
            u = np.concatenate([u, self.last_action])
        x = self.reservoir.update(u)
        self.last_x = x.copy()
        prediction = self.rls.predict(x) * self.obs_scale
        return augment(s, prediction)

    def note_action(self, a: np.ndarray) -> None:
        self.last_action = np.asarray(a, dtype=np.float64)

    def adapt(self, s_next: np.ndarray):
        """RLS step toward the observed next state; returns the step record."""
        return self.rls.rls_step(self.last_x, s_next / self.obs_scale)


def _train_loop(
    agent: SacAgent,
    env_factory: Callable[[int, np.random.Generator], tuple],
    total_steps: int,
    seed: int,
    pipeline: EsnPipeline | None,
    carry_reservoir_state: bool,
) -> list[EpisodeLog]:
    env_rng = make_rng(seed, STREAM_ENV)
    act_rng = make_rng(seed, STREAM_ACT)
    dr_rng = make_rng(seed, STREAM_DR)
    logs: list[EpisodeLog] = []
    global_step = 0
    episode = 0
    while global_step < total_steps:
        env, sweep_value = env_factory(episode, dr_rng)
        s = env.reset(env_rng)
        if pipeline is not None:
            pipeline.start_episode(carry_state=carry_reservoir_state)
            s_tilde = pipeline.observe(s)
        else:
            s_tilde = s
        log = EpisodeLog(seed=seed, episode=episode, sweep_value=sweep_value)
        if pipeline is not None:
            log.error_norms = []
            log.dw_norms = []
        while True:
            t0 = time.perf_counter_ns()
            if global_step < agent.cfg.warmup_steps:
                a = act_rng.uniform(agent.act_low, agent.act_high)
            else:
                a = agent.act(s_tilde, deterministic=False, rng=act_rng)
            tr = env.step(a)
            if pipeline is not None:
                pipeline.note_action(a)
                record = pipeline.adapt(tr.s_next)
                s_tilde_next = pipeline.observe(tr.s_next)
                log.error_norms.append(record.error_norm)
                log.dw_norms.append(record.dw_norm)
            else:
                s_tilde_next = tr.s_next
            agent.replay.push(s_tilde, a, tr.r, s_tilde_next, tr.done)
            if global_step >= agent.cfg.warmup_steps and len(agent.replay) >= agent.cfg.batch_size:
                agent.sac_update()
            log.rewards.append(tr.r)
            log.latencies_us.append(max(time.perf_counter_ns() - t0, 1) / 1000.0)
            global_step += 1
            s_tilde = s_tilde_next
            if tr.done or tr.truncated or global_step >= total_steps:
                break
        log.validate()
        logs.append(log)
        episode += 1
    return logs


def train(
    agent: SacAgent,
    env,
    reservoir: Reservoir | None,
    rls: RlsReadout | None,
    total_steps: int,
    seed: int,
    carry_reservoir_state: bool = False,
    include_action: bool = False,
) -> list[EpisodeLog]:
    """Run the online-adaptation training loop on a stationary environment.

    With a reservoir and readout, each step advances the reservoir on the
    new observation, predicts the next one, feeds the policy the augmented
    state, applies the action, and adapts the readout on the realized next
    observation before the SAC update. Readout weights and covariance
    persist across episodes; the reservoir state resets each episode unless
    ``carry_reservoir_state`` is set. Without a reservoir this is standard
    SAC on raw observations.
    """
    pipeline = None
    if reservoir is not None:
        if rls is None:
            raise ValueError("reservoir given without a readout")
        pipeline = EsnPipeline(reservoir, rls, env.obs_scale, include_action=include_action, act_dim=agent.act_dim)
    return _train_loop(agent, lambda episode, rng: (env, None), total_steps, seed, pipeline, carry_reservoir_state)


def train_dr(
    agent: SacAgent,
    env_name: str,
    env_cfg,
    dr_range: tuple,
    total_steps: int,
    seed: int,
) -> list[EpisodeLog]:
    """Domain-randomization baseline: plain SAC on raw observations with the
    environment's non-stationarity parameter resampled uniformly each
    episode (wind amplitude for cartpole, friction multiplier applied from
    step 0 for the sled)."""
    low, high = float(dr_range[0]), float(dr_range[1])
    if high < low:
        raise ValueError(f"invalid randomization range [{low}, {high}]")

    def factory(episode: int, rng: np.random.Generator):
        value = low if high == low else float(rng.uniform(low, high))
        if env_name == "cartpole":
            cfg = replace(env_cfg, wind_amplitude=value)
        elif env_name == "sled":
            cfg = replace(env_cfg, friction_multiplier=max(value, 1.0), switch_step=0)
        else:
            raise ValueError(f"unknown environment '{env_name}'")
        return make_env(env_name, cfg), value

    return _train_loop(agent, factory, total_steps, seed, pipeline=None, carry_reservoir_state=False)
