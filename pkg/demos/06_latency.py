"""Per-step cost of the full adaptive inference pipeline.

One control step runs: reservoir update -> readout prediction -> state
augmentation -> actor forward pass -> recursive least-squares update. All of
it is dense float64 linear algebra with no gradient computation, which is
why it fits comfortably inside a millisecond control budget on a CPU.
"""

import json

from esnrl.harness import config_from_dict, run_bench

for n_x in (100, 300, 500):
    cfg = config_from_dict(
        {
            "env": "cartpole",
            "method": "esn-oa",
            "seeds": [0],
            "reservoir": {"n_x": n_x},
            "bench_steps": 3000,
            "bench_warmup": 300,
        }
    )
    report = run_bench(cfg, f"bench_out_{n_x}")
    print(f"n_x={n_x:4d}: median {report['median_us']:7.1f} us   p99 {report['p99_us']:7.1f} us")
print()
print(json.dumps(report, indent=2))
print("reports written to bench_out_<n_x>/bench.json")
