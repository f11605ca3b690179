"""A miniature end-to-end training run (a few minutes on a laptop).

Trains the prediction-augmented agent on stationary cart-pole with a small
step budget -- far short of convergence, but enough to watch episode returns
climb and to produce a checkpoint the sweep and demo tools accept. The real
experiment configurations live in configs/.
"""

import numpy as np

from esnrl.harness import config_from_dict, run_sweep, run_train

cfg = config_from_dict(
    {
        "experiment": "quick-demo",
        "env": "cartpole",
        "method": "esn-oa",
        "seeds": [0],
        "total_steps": 12_000,
        "eval_episodes": 3,
        "sweep_grid": [0.0, 4.0, 8.0],
        "reservoir": {"n_x": 100},
        "sac": {"warmup_steps": 500},
    }
)

result = run_train(cfg, "quick_demo_out")
print(f"checkpoint: {result['checkpoints'][0]}")

returns = []
with open(result["training_curve"]) as fh:
    fh.readline()  # schema comment
    fh.readline()  # header
    for line in fh:
        returns.append(float(line.split(",")[3]))
chunk = max(len(returns) // 6, 1)
print("training returns (chunk means):", [round(float(np.mean(returns[i : i + chunk]))) for i in range(0, len(returns), chunk)])

summary = run_sweep(cfg, "quick_demo_out", "quick_demo_out")
print("frozen-policy evaluation across wind amplitudes (readout still adapting online):")
for row in summary.rows:
    print(f"  A={row.sweep_value}: mean return {row.mean_return:.0f}")
print("12k steps is a teaser; the shipped configs train for 100k+.")
