"""esnrl: online-adapting reinforcement learning.

A fixed random reservoir (echo state network) summarizes the recent
observation history; a recursive-least-squares readout predicts the next
observation online; the prediction augments a soft actor-critic policy's
input. The readout adapts within a handful of control steps, so a policy
trained on nominal dynamics keeps working when the physics drift or jump
mid-episode, with no gradient updates at deployment time.
"""

from .adapt import PredictionRecord, RlsConfig, RlsReadout, init, pretrain_readout, ridge_fit
from .agent import Mlp, ReplayBuffer, SacAgent, SacConfig, augment, train, train_dr
from .envs import (
    CartPoleWind,
    CartPoleWindConfig,
    EnvSpec,
    FrictionSled,
    FrictionSledConfig,
    Transition,
    make_env,
)
from .harness import RunConfig, load_config, run_bench, run_oracles, run_sweep, run_switch_demo, run_train
from .metrics import EpisodeLog, SweepSummary
from .numerics import make_rng, matvec, rescale_to_radius, spectral_radius
from .reservoir import Reservoir, ReservoirConfig, build, load_reservoir, readout, save_reservoir

__version__ = "0.1.0"

__all__ = [
    "CartPoleWind",
    "CartPoleWindConfig",
    "EnvSpec",
    "EpisodeLog",
    "FrictionSled",
    "FrictionSledConfig",
    "Mlp",
    "PredictionRecord",
    "ReplayBuffer",
    "Reservoir",
    "ReservoirConfig",
    "RlsConfig",
    "RlsReadout",
    "RunConfig",
    "SacAgent",
    "SacConfig",
    "SweepSummary",
    "Transition",
    "augment",
    "build",
    "init",
    "load_config",
    "load_reservoir",
    "make_env",
    "make_rng",
    "matvec",
    "pretrain_readout",
    "readout",
    "rescale_to_radius",
    "ridge_fit",
    "run_bench",
    "run_oracles",
    "run_sweep",
    "run_switch_demo",
    "run_train",
    "save_reservoir",
    "spectral_radius",
    "train",
    "train_dr",
]
