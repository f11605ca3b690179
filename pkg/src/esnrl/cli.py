"""Command-line entry point.

Subcommands map one-to-one onto the harness operations::

    esnrl train       --config cfg.json --out runs/exp
    esnrl sweep       --config cfg.json --out runs/exp [--checkpoint DIR]
    esnrl switch-demo --config cfg.json --out runs/exp [--checkpoint FILE]
    esnrl bench       --config cfg.json --out runs/exp
    esnrl oracles     --out runs/exp [--quick]

``--seed-offset`` shifts every configured seed; ``--quick`` keeps only the
first five seeds (and selects the small oracle scale). Exit status is
nonzero on configuration errors or failed oracles.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import harness


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", required=config_required, help="path to a JSON run configuration")
    parser.add_argument("--out", required=True, help="output directory for artifacts")
    parser.add_argument("--seed-offset", type=int, default=0, help="added to every configured seed")
    parser.add_argument("--quick", action="store_true", help="5-seed quick mode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esnrl", description="online-adapting reinforcement learning experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train one agent per seed on the nominal environment")
    _add_common(train)

    sweep = sub.add_parser("sweep", help="evaluate checkpoints across the sweep grid")
    _add_common(sweep)
    sweep.add_argument("--checkpoint", default=None, help="directory holding checkpoint_seed<N>.json files (default: config checkpoint_dir or --out)")

    switch = sub.add_parser("switch-demo", help="log one sled episode through the friction switch")
    _add_common(switch)
    switch.add_argument("--checkpoint", default=None, help="checkpoint file for the driving policy (default: scripted probe)")

    bench = sub.add_parser("bench", help="measure per-step inference latency")
    _add_common(bench)

    oracles = sub.add_parser("oracles", help="run the independent numerical oracles")
    _add_common(oracles, config_required=False)
    return parser


def _load_config(args) -> harness.RunConfig:
    cfg = harness.load_config(args.config)
    seeds = tuple(int(s) + args.seed_offset for s in cfg.seeds)
    if args.quick:
        seeds = seeds[:5]
    return replace(cfg, seeds=seeds)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracles":
            scale = "small" if args.quick else "full"
            report = harness.run_oracles(scale, args.out)
            for entry in report["oracles"]:
                status = "pass" if entry["passed"] else "FAIL"
                print(f"{status}  {entry['name']}: max_error={entry['max_error']:.3e} tol={entry['tolerance']:.0e}")
            return 0 if report["all_passed"] else 1

        cfg = _load_config(args)
        if args.command == "train":
            result = harness.run_train(cfg, args.out)
            print(f"wrote {len(result['checkpoints'])} checkpoints and {result['training_curve']}")
            return 0
        if args.command == "sweep":
            checkpoint_dir = args.checkpoint or cfg.checkpoint_dir or args.out
            summary = harness.run_sweep(cfg, checkpoint_dir, args.out)
            for row in summary.rows:
                print(f"{row.method} @ {row.sweep_value}: {row.mean_return:.1f} +/- {row.std_return:.1f}")
            return 0
        if args.command == "switch-demo":
            log = harness.run_switch_demo(cfg, args.checkpoint, args.out)
            print(f"logged {log.length} steps; return {log.episode_return:.1f}")
            return 0
        if args.command == "bench":
            report = harness.run_bench(cfg, args.out)
            print(json.dumps(report, indent=2))
            return 0
        raise AssertionError(f"unhandled command {args.command}")
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
