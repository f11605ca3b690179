import json

import numpy as np
import pytest

from esnrl.cli import main as cli_main
from esnrl.harness import (
    build_trial,
    checkpoint_path,
    config_from_dict,
    load_checkpoint,
    restore_trial,
    run_bench,
    run_oracles,
    run_sweep,
    run_switch_demo,
    run_train,
    save_checkpoint,
)
from esnrl.metrics import read_csv, summarize_sweep, write_csv


def tiny_overrides(env="cartpole", method="esn-oa", **kw):
    """A configuration small enough for fast end-to-end harness tests."""
    cfg = {
        "experiment": "tiny",
        "env": env,
        "method": method,
        "seeds": [0, 1],
        "total_steps": 120,
        "eval_episodes": 2,
        "sweep_grid": [0.0, 2.0] if env == "cartpole" else [1.0, 4.0],
        "reservoir": {"n_x": 20},
        "sac": {"hidden_sizes": [8], "batch_size": 16, "replay_capacity": 512, "warmup_steps": 40},
        "pretrain_episodes": 2,
        "bench_steps": 50,
        "bench_warmup": 10,
    }
    if env == "sled":
        cfg["env_config"] = {"max_steps": 60, "switch_step": 30}
    cfg.update(kw)
    return config_from_dict(cfg)


class TestConfig:
    def test_defaults(self):
        cfg = config_from_dict({})
        assert cfg.method == "esn-oa"
        assert cfg.seeds == tuple(range(10))
        assert cfg.sac.lr == 3e-4
        assert cfg.rls.forgetting == 0.99
        assert cfg.rls.delta == 100.0
        assert cfg.reservoir.n_x == 300

    def test_unknown_top_level_key(self):
        with pytest.raises(ValueError, match="unknown config key 'methd'"):
            config_from_dict({"methd": "sac"})

    def test_unknown_nested_key_reports_path(self):
        with pytest.raises(ValueError, match="sac.batch_sz"):
            config_from_dict({"sac": {"batch_sz": 3}})
        with pytest.raises(ValueError, match="env_config.gravty"):
            config_from_dict({"env_config": {"gravty": 9.8}})

    def test_invalid_method(self):
        with pytest.raises(ValueError, match="method"):
            config_from_dict({"method": "ppo"})

    def test_env_config_dispatch(self):
        cfg = config_from_dict({"env": "sled", "env_config": {"drive_gain": 7.0}})
        assert cfg.env_config.drive_gain == 7.0
        with pytest.raises(ValueError, match="env_config.drive_gain"):
            config_from_dict({"env": "cartpole", "env_config": {"drive_gain": 7.0}})

    def test_default_dr_ranges(self):
        assert config_from_dict({"env": "cartpole"}).effective_dr_range() == (0.0, 6.0)
        assert config_from_dict({"env": "sled"}).effective_dr_range() == (1.0, 4.0)
        assert config_from_dict({"dr_range": [2.0, 3.0]}).effective_dr_range() == (2.0, 3.0)


class TestCheckpoints:
    def test_round_trip_bit_exact(self, tmp_path):
        cfg = tiny_overrides()
        env, agent, reservoir, rls, rls_init = build_trial(cfg, seed=0)
        path = tmp_path / "chk.json"
        save_checkpoint(path, cfg, 0, agent, reservoir, rls_init)
        doc = load_checkpoint(path)
        env2, agent2, reservoir2, rls_init2 = restore_trial(doc, cfg)
        assert np.array_equal(agent2.actor.flat, agent.actor.flat)
        assert np.array_equal(agent2.critics.flat, agent.critics.flat)
        assert np.array_equal(reservoir2.w_res, reservoir.w_res)
        assert np.array_equal(rls_init2, rls_init)
        # a second save of the restored state is byte-identical
        path2 = tmp_path / "chk2.json"
        save_checkpoint(path2, cfg, 0, agent2, reservoir2, rls_init2)
        assert path.read_bytes() == path2.read_bytes()

    def test_method_mismatch_rejected(self, tmp_path):
        cfg = tiny_overrides()
        env, agent, reservoir, rls, rls_init = build_trial(cfg, seed=0)
        path = tmp_path / "chk.json"
        save_checkpoint(path, cfg, 0, agent, reservoir, rls_init)
        other = tiny_overrides(method="sac")
        with pytest.raises(ValueError, match="method"):
            restore_trial(load_checkpoint(path), other)

    def test_pretrained_initial_weights_nonzero(self):
        cfg = tiny_overrides(method="esn-oa-pt")
        _, _, _, rls, rls_init = build_trial(cfg, seed=0)
        assert np.max(np.abs(rls_init)) > 0.0
        assert np.array_equal(rls.w_out, rls_init)


class TestRunTrain:
    def test_writes_checkpoints_and_curve(self, tmp_path):
        cfg = tiny_overrides()
        result = run_train(cfg, tmp_path)
        for seed in cfg.seeds:
            assert checkpoint_path(tmp_path, seed).exists()
        header, rows = read_csv(result["training_curve"])
        assert header == ["seed", "episode", "step", "return", "length"]
        assert {int(r[0]) for r in rows} == {0, 1}

    def test_training_curve_deterministic(self, tmp_path):
        cfg = tiny_overrides()
        run_train(cfg, tmp_path / "a")
        run_train(cfg, tmp_path / "b")
        assert (tmp_path / "a" / "training_curve.csv").read_bytes() == (tmp_path / "b" / "training_curve.csv").read_bytes()

    def test_dr_curve_logs_sampled_parameter(self, tmp_path):
        cfg = tiny_overrides(method="dr", total_steps=60)
        result = run_train(cfg, tmp_path)
        header, rows = read_csv(result["training_curve"])
        assert header[-1] == "sampled_parameter"
        low, high = cfg.effective_dr_range()
        assert all(low <= float(r[-1]) <= high for r in rows)


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    cfg = tiny_overrides()
    run_train(cfg, out)
    return cfg, out


class TestRunSweep:

    def test_sweep_outputs_and_summary_consistency(self, trained, tmp_path):
        cfg, chk = trained
        summary = run_sweep(cfg, chk, tmp_path)
        header, rows = read_csv(tmp_path / "sweep_long.csv")
        assert header == ["method", "sweep_value", "seed", "episode", "return"]
        assert len(rows) == len(cfg.seeds) * len(cfg.sweep_grid) * cfg.eval_episodes
        # recompute the summary from the long rows
        parsed = [(r[0], float(r[1]), int(r[2]), int(r[3]), float(r[4])) for r in rows]
        recomputed = summarize_sweep(parsed, cfg.method)
        for row, expect in zip(summary.rows, recomputed.rows):
            assert row.mean_return == pytest.approx(expect.mean_return, abs=1e-12)
            assert row.std_return == pytest.approx(expect.std_return, abs=1e-12)
        sum_header, sum_rows = read_csv(tmp_path / "sweep_summary.csv")
        assert sum_header == ["method", "sweep_value", "mean_return", "std_return", "n_seeds"]
        for csv_row, row in zip(sum_rows, summary.rows):
            assert float(csv_row[2]) == row.mean_return
            assert float(csv_row[3]) == row.std_return

    def test_single_sample_summary_std_zero(self, trained, tmp_path):
        cfg, chk = trained
        from dataclasses import replace

        solo = replace(cfg, seeds=(0,), eval_episodes=1, sweep_grid=(1.0,))
        summary = run_sweep(solo, chk, tmp_path)
        assert summary.rows[0].std_return == 0.0

    def test_sweep_deterministic_bytes(self, trained, tmp_path):
        cfg, chk = trained
        run_sweep(cfg, chk, tmp_path / "a")
        run_sweep(cfg, chk, tmp_path / "b")
        for name in ("sweep_long.csv", "sweep_summary.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_empty_grid_rejected(self, trained, tmp_path):
        cfg, chk = trained
        from dataclasses import replace

        with pytest.raises(ValueError, match="sweep_grid"):
            run_sweep(replace(cfg, sweep_grid=()), chk, tmp_path)


class TestSwitchDemo:
    def test_probe_logs_adaptation_columns(self, tmp_path):
        cfg = tiny_overrides(env="sled", env_config={"max_steps": 120, "switch_step": 60, "friction_multiplier": 8.0})
        log = run_switch_demo(cfg, None, tmp_path)
        header, rows = read_csv(tmp_path / "switch_log.csv")
        assert header == ["t", "reward", "error_norm", "dw_norm"]
        assert len(rows) == 120
        assert log.length == 120

    def test_sac_log_has_no_adaptation_columns(self, tmp_path):
        cfg = tiny_overrides(env="sled", method="sac", total_steps=60, env_config={"max_steps": 80, "switch_step": 40})
        out = tmp_path / "train"
        run_train(cfg, out)
        log = run_switch_demo(cfg, checkpoint_path(out, 0), tmp_path)
        header, rows = read_csv(tmp_path / "switch_log.csv")
        assert header == ["t", "reward"]
        assert log.dw_norms is None

    def test_requires_sled(self, tmp_path):
        with pytest.raises(ValueError, match="sled"):
            run_switch_demo(tiny_overrides(env="cartpole"), None, tmp_path)


class TestBenchAndOracles:
    def test_bench_report_schema(self, tmp_path):
        cfg = tiny_overrides()
        report = run_bench(cfg, tmp_path)
        on_disk = json.loads((tmp_path / "bench.json").read_text())
        for key in ("median_us", "p99_us", "n_x", "obs_dim"):
            assert key in report and key in on_disk
        assert report["median_us"] > 0.0
        assert report["p99_us"] >= report["median_us"]
        assert report["n_x"] == cfg.reservoir.n_x

    def test_oracles_small_scale(self, tmp_path):
        report = run_oracles("small", tmp_path)
        assert report["all_passed"]
        assert len(report["oracles"]) >= 5
        names = {entry["name"] for entry in report["oracles"]}
        assert len(names) == len(report["oracles"])
        on_disk = json.loads((tmp_path / "oracles.json").read_text())
        assert on_disk["all_passed"]

    def test_oracle_scale_validated(self, tmp_path):
        with pytest.raises(ValueError):
            run_oracles("medium", tmp_path)


class TestCli:
    def _write_config(self, tmp_path, **kw):
        cfg = {
            "experiment": "cli",
            "method": "esn-oa",
            "seeds": [0],
            "total_steps": 80,
            "eval_episodes": 1,
            "sweep_grid": [0.0],
            "reservoir": {"n_x": 12},
            "sac": {"hidden_sizes": [4], "batch_size": 8, "replay_capacity": 256, "warmup_steps": 30},
        }
        cfg.update(kw)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_train_then_sweep(self, tmp_path, capsys):
        cfg_path = self._write_config(tmp_path)
        out = tmp_path / "out"
        assert cli_main(["train", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert cli_main(["sweep", "--config", str(cfg_path), "--out", str(out), "--checkpoint", str(out)]) == 0
        assert (out / "sweep_summary.csv").exists()

    def test_quick_flag_limits_seeds(self, tmp_path):
        cfg_path = self._write_config(tmp_path, seeds=list(range(8)), total_steps=30)
        out = tmp_path / "out"
        assert cli_main(["train", "--config", str(cfg_path), "--out", str(out), "--quick"]) == 0
        header, rows = read_csv(out / "training_curve.csv")
        assert {int(r[0]) for r in rows} == {0, 1, 2, 3, 4}

    def test_seed_offset(self, tmp_path):
        cfg_path = self._write_config(tmp_path, seeds=[0], total_steps=30)
        out = tmp_path / "out"
        assert cli_main(["train", "--config", str(cfg_path), "--out", str(out), "--seed-offset", "100"]) == 0
        assert checkpoint_path(out, 100).exists()

    def test_bad_config_fails_fast(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"sac": {"batch_sz": 2}}))
        assert cli_main(["train", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
        assert "sac.batch_sz" in capsys.readouterr().err

    def test_oracles_command(self, tmp_path, capsys):
        assert cli_main(["oracles", "--out", str(tmp_path), "--quick"]) == 0
        assert "pass" in capsys.readouterr().out


class TestCsvHelpers:
    def test_schema_line_and_float_round_trip(self, tmp_path):
        path = tmp_path / "x.csv"
        write_csv(path, ["a", "b"], [[1, 0.1], [2, 1.0 / 3.0]])
        text = path.read_text().splitlines()
        assert text[0] == "#schema=1"
        header, rows = read_csv(path)
        assert float(rows[1][1]) == 1.0 / 3.0

    def test_missing_schema_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="schema"):
            read_csv(path)
