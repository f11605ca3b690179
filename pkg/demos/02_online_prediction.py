"""Learning to predict cart-pole motion online, from zero, while it runs.

The readout starts at zero (its first prediction is the zero vector) and is
updated by recursive least squares after every step. Within a few steps it
tracks the one-step dynamics; a batch ridge fit on the same data shows how
close the online solution is to the best this linear readout can do.
"""

import numpy as np

from esnrl.adapt import RlsConfig, RlsReadout, ridge_fit
from esnrl.agent import EsnPipeline
from esnrl.envs import CartPoleWind, CartPoleWindConfig
from esnrl.numerics import make_rng
from esnrl.reservoir import ReservoirConfig, build

env = CartPoleWind(CartPoleWindConfig())
reservoir = build(ReservoirConfig(n_x=300, n_u=4, rho=0.9, alpha=0.3, seed=7))
rls = RlsReadout(RlsConfig(forgetting=0.99, delta=100.0), n_y=4, n_x=300)
pipeline = EsnPipeline(reservoir, rls, env.obs_scale)

rng = make_rng(0)
states, targets, sq_err, sq_zero = [], [], [], []
s = env.reset(rng)
pipeline.start_episode()
pipeline.observe(s)
while len(sq_err) < 2000:
    action = rng.uniform(-1.0, 1.0, size=1)
    tr = env.step(action)
    pipeline.note_action(action)
    states.append(pipeline.last_x.copy())
    targets.append(tr.s_next / env.obs_scale)
    record = pipeline.adapt(tr.s_next)
    sq_err.append(record.error_norm**2)
    sq_zero.append(float(np.sum(targets[-1] ** 2)))
    pipeline.observe(tr.s_next)
    if tr.done or tr.truncated:
        s = env.reset(rng)
        pipeline.start_episode()
        pipeline.observe(s)

w_batch = ridge_fit(np.stack(states, axis=1), np.stack(targets, axis=1), reg=0.01)
residual = np.stack(targets, axis=1) - w_batch @ np.stack(states, axis=1)
capacity = float(np.mean(np.sum(residual**2, axis=0)))

print(f"zero-prediction baseline MSE:            {np.mean(sq_zero):.4e}")
print(f"online RLS MSE, first 50 steps:          {np.mean(sq_err[:50]):.4e}")
print(f"online RLS MSE, last 500 steps:          {np.mean(sq_err[-500:]):.4e}")
print(f"batch ridge fit on the same data (floor): {capacity:.4e}")
print()
print("The online learner sits essentially at the batch-fit floor. The floor")
print("itself is set by the random actions: the reservoir only sees")
print("observations, so each action's effect on the next state is noise to it.")
