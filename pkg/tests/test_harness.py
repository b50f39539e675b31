import json
import logging

import numpy as np
import pytest

from mafsim.errors import CheckpointError, ConfigError
from mafsim.harness import cli
from mafsim.harness.config import ExperimentConfig, load_config, parse_config
from mafsim.harness.plotdata import emit_plot_data, exponential_smoothing
from mafsim.harness.runner import (WALL_CLOCK_COLUMNS, agent_from_checkpoint, build_agent,
                                   checkpoint_roundtrip, convergence_episode, derived_seed,
                                   make_env, read_metrics, run_experiment, save_checkpoint)
from mafsim.rl.checkpoint import _digest

SMALL_RUN = """
[system]
devices_per_slice = 10
abnormal_device_count = 2

[experiment]
agents = ppo, dqn, ddpg, full-monitor
total_rounds = 200
eval_every = 5
eval_episodes = 2
seeds = 0, 1

[agent.ppo]
hidden = 8, 8
batch_episodes = 4

[agent.dqn]
hidden = 8, 8
batch_size = 8

[agent.ddpg]
hidden = 8, 8
batch_size = 8
"""


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = parse_config(SMALL_RUN).with_overrides(output_dir=str(out))
    return cfg, run_experiment(cfg), out


def _strip_wall_clock(path):
    rows = read_metrics(path)
    return [{k: v for k, v in r.items() if k not in WALL_CLOCK_COLUMNS} for r in rows]


class TestConfig:
    def test_empty_is_defaults(self, caplog):
        with caplog.at_level(logging.INFO):
            cfg = parse_config("")
        s = cfg.system
        assert (s.anomaly_interval, s.devices_per_slice, s.abnormal_device_count) == (20, 100, 10)
        assert (s.device_tx_power, s.abnormal_device_power, s.tx_rate_override) == (0.5, 1, 10)
        assert (s.cpu_frequency, s.upload_power_per_block, s.unit_block_size) == (1, 1, 100)
        assert s.accuracy_threshold == 0.93
        assert cfg.total_rounds == 15000 and cfg.rounds_per_episode == 10
        assert "default" in caplog.text

    def test_threshold_out_of_range(self):
        with pytest.raises(ConfigError, match=r"accuracy_threshold out of \(0,1\]"):
            parse_config("[system]\naccuracy_threshold = 1.5\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="devicess"):
            parse_config("[system]\ndevicess = 5\n")

    def test_unknown_section(self):
        with pytest.raises(ConfigError):
            parse_config("[sytem]\n")

    def test_text_roundtrip(self, tmp_path):
        cfg = parse_config(SMALL_RUN)
        (tmp_path / "c.ini").write_text(cfg.to_text())
        assert load_config(tmp_path / "c.ini") == cfg

    def test_overrides(self):
        cfg = ExperimentConfig().with_overrides(seed=7, agents=["ppo"])
        assert cfg.seeds == (7,) and [a.tag for a in cfg.agents] == ["ppo"]

    def test_seed_streams_differ(self):
        assert derived_seed(0, 1, 5) != derived_seed(0, 2, 5) != derived_seed(1, 1, 5)


class TestPlotData:
    def test_smoothing_zero_passthrough(self, rng):
        y = rng.normal(size=10)
        np.testing.assert_array_equal(exponential_smoothing(y, 0.0), y)

    def test_smoothing_recursion(self):
        np.testing.assert_allclose(exponential_smoothing([1.0, 3.0], 0.5), [1.0, 2.0])
        with pytest.raises(ValueError):
            exponential_smoothing([1.0], 1.0)

    def test_accuracy_panel_has_tau(self, small_run, tmp_path):
        _, _, out = small_run
        paths = emit_plot_data(out, "accuracy", tmp_path, smoothing=0.0)
        names = {p.name for p in paths}
        assert {"accuracy_ppo.dat", "accuracy_dqn.dat", "accuracy_tau.dat", "accuracy.gp"} <= names
        tau_values = {float(line.split()[1]) for line in
                      (tmp_path / "accuracy_tau.dat").read_text().splitlines()
                      if not line.startswith("#")}
        assert tau_values == {0.93}

    def test_empty_metrics_is_error(self, tmp_path):
        path = tmp_path / "metrics.csv"
        path.write_text("# mafsim-metrics v1\nrun_id,agent,seed,phase,episode,mean_reward\n")
        with pytest.raises(ValueError):
            emit_plot_data(path, "reward", tmp_path / "out")

    def test_unknown_panel(self, small_run, tmp_path):
        with pytest.raises(ValueError):
            emit_plot_data(small_run[2], "latency", tmp_path)


class TestRunner:
    def test_layout(self, small_run):
        cfg, summary, out = small_run
        assert len(summary.runs) == 8
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == "complete" and all(r["complete"] for r in manifest["runs"])
        for tag in ("ppo", "dqn", "ddpg", "full-monitor"):
            for seed in (0, 1):
                rows = read_metrics(out / tag / f"seed{seed}" / "metrics.csv")
                assert sum(r["phase"] == "train" for r in rows) == cfg.n_episodes
                assert sum(r["phase"] == "eval" for r in rows) == 4
        assert (out / "summary.csv").read_text().startswith("# mafsim-summary v1")

    def test_full_monitor_summary(self, small_run):
        row = small_run[1].by_agent()["full-monitor"]
        # 10 devices instead of 100: the calibrated 230 kW/min scales to 23
        assert row["final_eval_energy_per_minute"] == pytest.approx(23.0, rel=1e-12)
        assert row["final_eval_accuracy"] == 1.0

    def test_same_seed_same_bytes(self, small_run, tmp_path):
        cfg, _, out = small_run
        again = cfg.with_overrides(output_dir=str(tmp_path), agents=["ppo", "ddpg"])
        run_experiment(again)
        for tag in ("ppo", "ddpg"):
            a = out / tag / "seed1" / "metrics.csv"
            b = tmp_path / tag / "seed1" / "metrics.csv"
            assert _strip_wall_clock(a) == _strip_wall_clock(b)

    def test_checkpoint_roundtrip(self, small_run):
        for tag in ("ppo", "dqn", "ddpg"):
            report = checkpoint_roundtrip(small_run[2] / tag / "seed0" / "checkpoint.json")
            assert report["identical"] and len(report["saved_actions"]) == 10

    def test_truncated_checkpoint(self, small_run, tmp_path):
        text = (small_run[2] / "ppo" / "seed0" / "checkpoint.json").read_text()
        (tmp_path / "c.json").write_text(text[: len(text) // 2])
        with pytest.raises(CheckpointError, match="corrupt|checksum"):
            agent_from_checkpoint(tmp_path / "c.json")

    def test_shape_mismatch_names_layer(self, small_run, tmp_path):
        src = small_run[2] / "ppo" / "seed0" / "checkpoint.json"
        body = json.loads(src.read_text())
        body["meta"]["params"]["hidden"] = [16, 8]
        body.pop("sha256")
        body["sha256"] = _digest(body)
        (tmp_path / "c.json").write_text(json.dumps(body))
        with pytest.raises(CheckpointError, match="shape mismatch for layer 'policy/W0'"):
            agent_from_checkpoint(tmp_path / "c.json")

    def test_read_metrics_header(self, tmp_path):
        (tmp_path / "m.csv").write_text("a,b\n")
        with pytest.raises(ValueError):
            read_metrics(tmp_path / "m.csv")


class TestConvergence:
    def test_flat_series_converges_immediately(self):
        assert convergence_episode(np.ones(200)) <= 50

    def test_step_series(self):
        rewards = np.concatenate([np.zeros(300), np.ones(300)])
        ep = convergence_episode(rewards)
        assert 300 < ep <= 350


class TestCLI:
    def test_print_config(self, capsys):
        assert cli.main(["print-config"]) == cli.EXIT_OK
        assert "[system]" in capsys.readouterr().out

    def test_bad_config(self, tmp_path, capsys):
        (tmp_path / "bad.ini").write_text("[system]\ndevicess = 3\n")
        assert cli.main(["print-config", "--config", str(tmp_path / "bad.ini")]) == cli.EXIT_CONFIG
        assert "devicess" in capsys.readouterr().err

    def test_eval_and_gate(self, small_run, capsys):
        ckpt = str(small_run[2] / "full-monitor" / "seed0" / "checkpoint.json")
        assert cli.main(["eval", ckpt, "--episodes", "3", "--gate"]) == cli.EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["accuracy"] == 1.0

    def test_gate_failure(self, tmp_path, capsys):
        cfg = parse_config(SMALL_RUN)
        env = make_env(cfg)
        agent = build_agent(cfg, cfg.agent("ppo"), 0, env)
        agent.policy.params[-1][:] = -50.0    # greedy t1 clamps to 1 minute
        save_checkpoint(agent, tmp_path / "c.json", cfg, env)
        # periodic events sit on round boundaries and are always caught; use uniform ones
        (tmp_path / "u.ini").write_text(SMALL_RUN.replace("[experiment]",
                                                          "[experiment]\ntimeline_mode = uniform"))
        code = cli.main(["eval", str(tmp_path / "c.json"), "--episodes", "3", "--gate",
                         "--config", str(tmp_path / "u.ini")])
        assert json.loads(capsys.readouterr().out)["accuracy"] < 0.93
        assert code == cli.EXIT_GATE

    def test_verify_checkpoint(self, small_run, capsys):
        ckpt = str(small_run[2] / "ddpg" / "seed0" / "checkpoint.json")
        assert cli.main(["verify-checkpoint", ckpt]) == cli.EXIT_OK
        assert json.loads(capsys.readouterr().out)["identical"] is True

    def test_plot(self, small_run, tmp_path, capsys):
        assert cli.main(["plot", str(small_run[2]), "--out", str(tmp_path)]) == cli.EXIT_OK
        assert (tmp_path / "energy.gp").exists() and (tmp_path / "reward_ppo.dat").exists()

    def test_missing_checkpoint(self, tmp_path):
        assert cli.main(["verify-checkpoint", str(tmp_path / "none.json")]) == cli.EXIT_RUNTIME

    def test_run(self, tmp_path, capsys):
        cfg = tmp_path / "c.ini"
        cfg.write_text(SMALL_RUN)
        code = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"),
                         "--agent", "full-monitor", "--seed", "3"])
        assert code == cli.EXIT_OK
        assert "full-monitor" in capsys.readouterr().out
        assert (tmp_path / "o" / "full-monitor" / "seed3" / "metrics.csv").exists()
