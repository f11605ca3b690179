"""Experiment harness: configuration, protocols, and output artifacts.

The harness turns a JSON run configuration into the experiments behind the
library's evaluation story:

* ``run_train``   -- train one agent per seed on the nominal environment
  (randomized for the ``dr`` method), writing per-seed checkpoints and a
  training curve.
* ``run_sweep``   -- evaluate frozen policies across a grid of
  non-stationarity values (wind amplitude / friction multiplier); readouts
  keep adapting online for the adaptive methods.
* ``run_switch_demo`` -- one long episode around the sled's friction
  switch, logging per-step reward, prediction error, and weight-update
  norm.
* ``run_bench``   -- per-step latency of the full inference pipeline.
* ``run_oracles`` -- the independent numerical oracles.

Everything is deterministic given (config, seeds): repeated runs produce
byte-identical CSVs.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path


import numpy as np

from . import oracles as oracle_suite
from .adapt import RlsConfig, RlsReadout, pretrain_readout, save_readout_snapshot
from .agent import EsnPipeline, SacAgent, SacConfig, train, train_dr
from .envs import CartPoleWindConfig, FrictionSledConfig, cartpole_rule_action, make_env, sled_probe_action, sled_rule_action, Transition
from .metrics import EpisodeLog, SweepSummary, summarize_sweep, write_csv
from .numerics import make_rng
from .reservoir import Reservoir, ReservoirConfig, build

METHODS = ("sac", "esn-oa", "esn-oa-pt", "dr")

STREAM_RESERVOIR = 30
STREAM_EVAL = 31
STREAM_PRETRAIN = 32
STREAM_PROBE = 33

CHECKPOINT_FORMAT = "esnrl-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ReservoirParams:
    """Reservoir shape for a run; the input width and per-trial seed are
    derived at build time."""

    n_x: int = 300
    rho: float = 0.9
    alpha: float = 0.3
    input_scale: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "default"
    env: str = "cartpole"
    method: str = "esn-oa"
    seeds: tuple = tuple(range(10))
    total_steps: int = 100_000
    eval_episodes: int = 10
    sweep_grid: tuple = ()
    out_dir: str = "runs"
    checkpoint_dir: str | None = None
    env_config: CartPoleWindConfig | FrictionSledConfig = field(default_factory=CartPoleWindConfig)
    reservoir: ReservoirParams = field(default_factory=ReservoirParams)
    rls: RlsConfig = field(default_factory=RlsConfig)
    sac: SacConfig = field(default_factory=SacConfig)
    include_action: bool = False
    carry_reservoir_state: bool = False
    rls_reset_per_value: bool = True
    rls_reset_per_episode: bool = False
    eval_stochastic: bool = False
    pretrain_episodes: int = 50
    pretrain_reg: float = 1e-4
    dr_range: tuple | None = None
    rls_snapshot_every: int = 0
    bench_steps: int = 10_000
    bench_warmup: int = 1000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got '{self.method}'")
        if self.env not in ("cartpole", "sled"):
            raise ValueError(f"env must be 'cartpole' or 'sled', got '{self.env}'")
        if len(self.seeds) < 1:
            raise ValueError("need at least one seed")
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if self.eval_episodes < 1:
            raise ValueError("eval_episodes must be >= 1")
        wants_cartpole_cfg = self.env == "cartpole"
        has_cartpole_cfg = isinstance(self.env_config, CartPoleWindConfig)
        if wants_cartpole_cfg != has_cartpole_cfg:
            raise ValueError(f"env_config type does not match env '{self.env}'")

    @property
    def uses_esn(self) -> bool:
        return self.method in ("esn-oa", "esn-oa-pt")

    def effective_dr_range(self) -> tuple:
        if self.dr_range is not None:
            return tuple(float(v) for v in self.dr_range)
        return (0.0, 6.0) if self.env == "cartpole" else (1.0, 4.0)


_ENV_CONFIG_TYPES = {"cartpole": CartPoleWindConfig, "sled": FrictionSledConfig}


def _coerce(value, target_type, path: str):
    if target_type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"config key '{path}' must be a number, got {value!r}")
        return float(value)
    if target_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"config key '{path}' must be an integer, got {value!r}")
        return int(value)
    if target_type is bool:
        if not isinstance(value, bool):
            raise ValueError(f"config key '{path}' must be a boolean, got {value!r}")
        return value
    if target_type is str:
        if not isinstance(value, str):
            raise ValueError(f"config key '{path}' must be a string, got {value!r}")
        return value
    return value


def _build_dataclass(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ValueError(f"config key '{path}' must be an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ValueError(f"unknown config key '{path}.{key}'" if path else f"unknown config key '{key}'")
    kwargs = {}
    for key, value in data.items():
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    """Build a :class:`RunConfig` from plain JSON data.

    Unknown keys fail fast with their full path; nested sections are
    dispatched to their own dataclasses (``env_config`` by the ``env``
    field).
    """
    if not isinstance(data, dict):
        raise ValueError("run config must be a JSON object")
    data = dict(data)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ValueError(f"unknown config key '{key}'")
    env = data.get("env", "cartpole")
    if env not in _ENV_CONFIG_TYPES:
        raise ValueError(f"env must be 'cartpole' or 'sled', got '{env}'")
    kwargs: dict = {}
    for key, value in data.items():
        if key == "env_config":
            kwargs[key] = _build_dataclass(_ENV_CONFIG_TYPES[env], value, "env_config")
        elif key == "reservoir":
            kwargs[key] = _build_dataclass(ReservoirParams, value, "reservoir")
        elif key == "rls":
            kwargs[key] = _build_dataclass(RlsConfig, value, "rls")
        elif key == "sac":
            value = dict(value) if isinstance(value, dict) else value
            if isinstance(value, dict) and "hidden_sizes" in value:
                value["hidden_sizes"] = tuple(value["hidden_sizes"])
            kwargs[key] = _build_dataclass(SacConfig, value, "sac")
        elif key in ("seeds", "sweep_grid", "dr_range"):
            kwargs[key] = tuple(value) if value is not None else None
        else:
            kwargs[key] = value
    if "env_config" not in kwargs:
        kwargs["env_config"] = _ENV_CONFIG_TYPES[env]()
    try:
        return RunConfig(**kwargs)
    except TypeError as err:
        raise ValueError(f"invalid run config: {err}") from err


def load_config(path: str | Path) -> RunConfig:
    return config_from_dict(json.loads(Path(path).read_text()))


def _config_to_jsonable(cfg) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if dataclasses.is_dataclass(value):
            out[f.name] = _config_to_jsonable(value)
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


# -- component assembly ----------------------------------------------------


def _reservoir_config(cfg: RunConfig, obs_dim: int, act_dim: int, seed: int) -> ReservoirConfig:
    n_u = obs_dim + (act_dim if cfg.include_action else 0)
    return ReservoirConfig(
        n_x=cfg.reservoir.n_x,
        n_u=n_u,
        rho=cfg.reservoir.rho,
        alpha=cfg.reservoir.alpha,
        input_scale=cfg.reservoir.input_scale,
        seed=int(make_rng(seed, STREAM_RESERVOIR).integers(0, 2**63 - 1)),
    )


def _collect_pretrain_rollouts(cfg: RunConfig, seed: int) -> list[Transition]:
    """Stationary-environment rollouts from the noisy rule-based policy."""
    env = make_env(cfg.env, cfg.env_config)
    rule = cartpole_rule_action if cfg.env == "cartpole" else sled_rule_action
    rng = make_rng(seed, STREAM_PRETRAIN)
    transitions: list[Transition] = []
    for _ in range(cfg.pretrain_episodes):
        s = env.reset(rng)
        while True:
            tr = env.step(rule(s, rng))
            transitions.append(tr)
            s = tr.s_next
            if tr.done or tr.truncated:
                break
    return transitions


def build_trial(cfg: RunConfig, seed: int):
    """Assemble (env, agent, reservoir, rls, rls_init_w_out) for one seed."""
    env = make_env(cfg.env, cfg.env_config)
    spec = env.spec
    input_dim = 2 * spec.obs_dim if cfg.uses_esn else spec.obs_dim
    agent = SacAgent(input_dim, spec.act_dim, cfg.sac, spec.act_low, spec.act_high, seed)
    reservoir = None
    rls = None
    rls_init_w_out = None
    if cfg.uses_esn:
        reservoir = build(_reservoir_config(cfg, spec.obs_dim, spec.act_dim, seed))
        if cfg.method == "esn-oa-pt":
            rollouts = _collect_pretrain_rollouts(cfg, seed)
            rls = pretrain_readout(rollouts, reservoir, reg=cfg.pretrain_reg, rls_cfg=cfg.rls, obs_scale=env.obs_scale)
        else:
            rls = RlsReadout(cfg.rls, n_y=spec.obs_dim, n_x=cfg.reservoir.n_x)
        rls_init_w_out = rls.w_out.copy()
    return env, agent, reservoir, rls, rls_init_w_out


# -- checkpoints -------------------------------------------------------------


def checkpoint_path(directory: str | Path, seed: int) -> Path:
    return Path(directory) / f"checkpoint_seed{seed}.json"


def save_checkpoint(path: str | Path, cfg: RunConfig, seed: int, agent: SacAgent, reservoir: Reservoir | None, rls_init_w_out: np.ndarray | None) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "method": cfg.method,
        "env": cfg.env,
        "seed": seed,
        "include_action": cfg.include_action,
        "env_config": _config_to_jsonable(cfg.env_config),
        "sac_config": _config_to_jsonable(cfg.sac),
        "rls_config": _config_to_jsonable(cfg.rls),
        "agent": agent.state_dict(),
        "reservoir_config": None if reservoir is None else _config_to_jsonable(reservoir.cfg),
        "rls_init_w_out": None if rls_init_w_out is None else rls_init_w_out.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a checkpoint artifact")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    return doc


def restore_trial(doc: dict, cfg: RunConfig):
    """Rebuild (env, agent, reservoir, rls_init_w_out) from a checkpoint."""
    if doc["method"] != cfg.method:
        raise ValueError(f"checkpoint was trained with method '{doc['method']}' but the config requests '{cfg.method}'")
    if doc["env"] != cfg.env:
        raise ValueError(f"checkpoint environment '{doc['env']}' does not match config '{cfg.env}'")
    env = make_env(cfg.env, cfg.env_config)
    spec = env.spec
    sac_cfg = _build_dataclass(SacConfig, {**doc["sac_config"], "hidden_sizes": tuple(doc["sac_config"]["hidden_sizes"])}, "sac")
    input_dim = 2 * spec.obs_dim if cfg.uses_esn else spec.obs_dim
    agent = SacAgent(input_dim, spec.act_dim, sac_cfg, spec.act_low, spec.act_high, doc["seed"])
    agent.load_state_dict(doc["agent"])
    reservoir = None
    rls_init_w_out = None
    if doc["reservoir_config"] is not None:
        reservoir = build(ReservoirConfig(**doc["reservoir_config"]))
        rls_init_w_out = np.array(doc["rls_init_w_out"])
    return env, agent, reservoir, rls_init_w_out


# -- training ---------------------------------------------------------------


def nominal_env_config(cfg: RunConfig):
    """The stationary version of the run's environment: no wind, no
    friction scaling. Training always happens here (dr resamples on top)."""
    if cfg.env == "cartpole":
        return replace(cfg.env_config, wind_amplitude=0.0)
    return replace(cfg.env_config, friction_multiplier=1.0)


def run_train(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Train every seed on the nominal environment, writing checkpoints
    plus ``training_curve.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = replace(cfg, env_config=nominal_env_config(cfg))
    curve_rows = []
    paths = {}
    for seed in cfg.seeds:
        env, agent, reservoir, rls, rls_init_w_out = build_trial(cfg, seed)
        if cfg.method == "dr":
            logs = train_dr(agent, cfg.env, cfg.env_config, cfg.effective_dr_range(), cfg.total_steps, seed)
        else:
            logs = train(
                agent,
                env,
                reservoir,
                rls,
                cfg.total_steps,
                seed,
                carry_reservoir_state=cfg.carry_reservoir_state,
                include_action=cfg.include_action,
            )
        step = 0
        for log in logs:
            step += log.length
            row = [seed, log.episode, step, log.episode_return, log.length]
            if cfg.method == "dr":
                row.append(log.sweep_value)
            curve_rows.append(row)
        path = checkpoint_path(out, seed)
        save_checkpoint(path, cfg, seed, agent, reservoir, rls_init_w_out)
        paths[seed] = path
    header = ["seed", "episode", "step", "return", "length"]
    if cfg.method == "dr":
        header.append("sampled_parameter")
    write_csv(out / "training_curve.csv", header, curve_rows)
    return {"checkpoints": paths, "training_curve": out / "training_curve.csv"}


# -- evaluation --------------------------------------------------------------


def _sweep_env_config(cfg: RunConfig, value: float):
    if cfg.env == "cartpole":
        return replace(cfg.env_config, wind_amplitude=float(value))
    return replace(cfg.env_config, friction_multiplier=float(value))


def _fresh_rls(cfg: RunConfig, obs_dim: int, rls_init_w_out: np.ndarray) -> RlsReadout:
    rls = RlsReadout(cfg.rls, n_y=obs_dim, n_x=cfg.reservoir.n_x)
    rls.w_out = rls_init_w_out.copy()
    return rls


def _run_episode(agent_act, env, pipeline: EsnPipeline | None, rng: np.random.Generator, seed: int, episode: int, sweep_value: float | None, carry_reservoir_state: bool = False) -> EpisodeLog:
    """One evaluation episode; the policy is frozen, the readout adapts."""
    s = env.reset(rng)
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
        a = agent_act(s_tilde, rng)
        tr = env.step(a)
        if pipeline is not None:
            pipeline.note_action(a)
            record = pipeline.adapt(tr.s_next)
            s_tilde = pipeline.observe(tr.s_next)
            log.error_norms.append(record.error_norm)
            log.dw_norms.append(record.dw_norm)
        else:
            s_tilde = tr.s_next
        log.rewards.append(tr.r)
        log.latencies_us.append(max(time.perf_counter_ns() - t0, 1) / 1000.0)
        if tr.done or tr.truncated:
            break
    log.validate()
    return log


def run_sweep(cfg: RunConfig, checkpoint_dir: str | Path, out_dir: str | Path) -> SweepSummary:
    """Frozen-policy evaluation across the sweep grid.

    For the adaptive methods the readout restarts from its method-initial
    weights at every sweep value (zeros for esn-oa, the pretrained solution
    for esn-oa-pt) and keeps adapting across the episodes within a value;
    both behaviors have config switches.
    """
    if not cfg.sweep_grid:
        raise ValueError("sweep_grid must be nonempty for sweep experiments")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    long_rows = []
    for seed in cfg.seeds:
        doc = load_checkpoint(checkpoint_path(checkpoint_dir, seed))
        _, agent, reservoir, rls_init_w_out = restore_trial(doc, cfg)

        def agent_act(s_tilde, r):
            return agent.act(s_tilde, deterministic=not cfg.eval_stochastic, rng=r)

        rls = None
        for value_index, value in enumerate(cfg.sweep_grid):
            env = make_env(cfg.env, _sweep_env_config(cfg, value))
            pipeline = None
            if cfg.uses_esn:
                if cfg.rls_reset_per_value or rls is None:
                    rls = _fresh_rls(cfg, env.spec.obs_dim, rls_init_w_out)
                pipeline = EsnPipeline(reservoir, rls, env.obs_scale, include_action=cfg.include_action, act_dim=env.spec.act_dim)
            rng = make_rng(seed, STREAM_EVAL, value_index)
            for episode in range(cfg.eval_episodes):
                if cfg.uses_esn and cfg.rls_reset_per_episode:
                    rls = _fresh_rls(cfg, env.spec.obs_dim, rls_init_w_out)
                    pipeline.rls = rls
                log = _run_episode(agent_act, env, pipeline, rng, seed, episode, float(value), carry_reservoir_state=cfg.carry_reservoir_state)
                long_rows.append((cfg.method, float(value), seed, episode, log.episode_return))
    write_csv(out / "sweep_long.csv", ["method", "sweep_value", "seed", "episode", "return"], long_rows)
    summary = summarize_sweep(long_rows, cfg.method)
    summary_rows = [
        [row.method, row.sweep_value, row.mean_return, row.std_return, len(row.seed_returns)]
        for row in summary.rows
    ]
    write_csv(out / "sweep_summary.csv", ["method", "sweep_value", "mean_return", "std_return", "n_seeds"], summary_rows)
    return summary


def run_switch_demo(cfg: RunConfig, checkpoint: str | Path | None, out_dir: str | Path) -> EpisodeLog:
    """One long sled episode through the friction switch, logged per step.

    With a checkpoint the trained policy drives; without one a scripted
    noisy constant-drive probe stands in, which is enough to exercise the
    adaptation mechanism itself.
    """
    if cfg.env != "sled":
        raise ValueError("the switch demo runs on the sled environment")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seeds[0]
    uses_esn = cfg.uses_esn

    if checkpoint is not None:
        doc = load_checkpoint(checkpoint)
        env, agent, reservoir, rls_init_w_out = restore_trial(doc, cfg)

        def agent_act(s_tilde, rng):
            return agent.act(s_tilde, deterministic=not cfg.eval_stochastic, rng=rng)

    else:
        env = make_env(cfg.env, cfg.env_config)
        reservoir = build(_reservoir_config(cfg, env.spec.obs_dim, env.spec.act_dim, seed)) if uses_esn else None
        rls_init_w_out = np.zeros((env.spec.obs_dim, cfg.reservoir.n_x)) if uses_esn else None
        probe_step = iter(range(10**9))

        def agent_act(s_tilde, rng):
            return sled_probe_action(next(probe_step))

    pipeline = None
    rls = None
    if uses_esn:
        rls = _fresh_rls(cfg, env.spec.obs_dim, rls_init_w_out)
        pipeline = EsnPipeline(reservoir, rls, env.obs_scale, include_action=cfg.include_action, act_dim=env.spec.act_dim)
    rng = make_rng(seed, STREAM_PROBE)
    log = _run_episode(agent_act, env, pipeline, rng, seed, episode=0, sweep_value=cfg.env_config.friction_multiplier)

    if uses_esn and cfg.rls_snapshot_every > 0:
        save_readout_snapshot(out / "readout_final.json", rls)
    if uses_esn:
        header = ["t", "reward", "error_norm", "dw_norm"]
        rows = [[t, r, e, d] for t, (r, e, d) in enumerate(zip(log.rewards, log.error_norms, log.dw_norms))]
    else:
        header = ["t", "reward"]
        rows = [[t, r] for t, r in enumerate(log.rewards)]
    write_csv(out / "switch_log.csv", header, rows)
    return log


def run_bench(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Median and p99 per-step latency of reservoir update + prediction +
    augmentation + actor forward + readout adaptation, measured over
    ``bench_steps`` after ``bench_warmup`` discarded steps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seeds[0]
    env, agent, reservoir, rls, _ = build_trial(replace(cfg, method="esn-oa") if not cfg.uses_esn else cfg, seed)
    pipeline = EsnPipeline(reservoir, rls, env.obs_scale, include_action=cfg.include_action, act_dim=env.spec.act_dim)
    rng = make_rng(seed, STREAM_PROBE)
    total = cfg.bench_warmup + cfg.bench_steps
    samples = np.zeros(cfg.bench_steps)
    s = env.reset(rng)
    pipeline.start_episode()
    i = 0
    while i < total:
        t0 = time.perf_counter_ns()
        s_tilde = pipeline.observe(s)
        a = agent.act(s_tilde, deterministic=True)
        dt_partial = time.perf_counter_ns() - t0
        pipeline.note_action(a)
        tr = env.step(a)
        t1 = time.perf_counter_ns()
        pipeline.adapt(tr.s_next)
        dt = dt_partial + time.perf_counter_ns() - t1
        if i >= cfg.bench_warmup:
            samples[i - cfg.bench_warmup] = dt / 1000.0
        i += 1
        s = tr.s_next
        if tr.done or tr.truncated:
            s = env.reset(rng)
            pipeline.start_episode()
    report = {
        "median_us": float(np.median(samples)),
        "p99_us": float(np.percentile(samples, 99)),
        "n_x": cfg.reservoir.n_x,
        "obs_dim": env.spec.obs_dim,
        "steps": cfg.bench_steps,
        "warmup": cfg.bench_warmup,
    }
    (out / "bench.json").write_text(json.dumps(report, indent=2))
    return report


def run_oracles(scale: str, out_dir: str | Path) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = oracle_suite.run_oracles(scale)
    (out / "oracles.json").write_text(json.dumps(report, indent=2))
    return report
