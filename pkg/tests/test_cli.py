"""CLI surface: flags, exit codes, file outputs."""

import json
import socket

import pytest
from click.testing import CliRunner

from envlink import harness
from envlink.cli import main
from envlink.harness import Divergence, ServeProcess, run_parity


@pytest.fixture
def runner():
    return CliRunner()


class TestRollout:
    def test_emits_one_line_per_step(self, runner, tmp_path):
        out = tmp_path / "roll.jsonl"
        result = runner.invoke(
            main, ["rollout", "--env", "pendulum", "--steps", "10", "--seed", "1", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert len(lines) == 10
        first = json.loads(lines[0])
        assert set(first) == {"round", "actions", "rewards", "dones"}
        assert first["round"] == 0

    def test_zero_steps_writes_empty_file(self, runner, tmp_path):
        out = tmp_path / "empty.jsonl"
        result = runner.invoke(
            main, ["rollout", "--env", "pendulum", "--steps", "0", "--out", str(out)]
        )
        assert result.exit_code == 0
        assert out.read_text() == ""

    def test_env_and_connect_are_exclusive(self, runner):
        result = runner.invoke(
            main, ["rollout", "--env", "pendulum", "--connect", "x:1", "--steps", "1"]
        )
        assert result.exit_code == 2
        result = runner.invoke(main, ["rollout", "--steps", "1"])
        assert result.exit_code == 2

    def test_bad_env_spec_is_usage_error(self, runner):
        result = runner.invoke(main, ["rollout", "--env", "nope", "--steps", "1"])
        assert result.exit_code == 2

    def test_unreachable_host_exits_3(self, runner, free_port):
        result = runner.invoke(
            main, ["rollout", "--connect", f"127.0.0.1:{free_port}", "--steps", "1"]
        )
        assert result.exit_code == 3

    def test_local_and_served_rollouts_byte_identical(self, runner, tmp_path):
        local_file = tmp_path / "local.jsonl"
        served_file = tmp_path / "served.jsonl"
        args = ["--steps", "50", "--seed", "9"]
        result = runner.invoke(
            main, ["rollout", "--env", "gridworld:3x3:n2", *args, "--out", str(local_file)]
        )
        assert result.exit_code == 0, result.output
        with ServeProcess("gridworld:3x3:n2") as child:
            result = runner.invoke(
                main,
                ["rollout", "--connect", f"{child.host}:{child.port}", *args, "--out", str(served_file)],
            )
            assert result.exit_code == 0, result.output
        assert local_file.read_bytes() == served_file.read_bytes()


class TestServe:
    def test_bad_env_spec_exits_2(self, runner):
        result = runner.invoke(main, ["serve", "--env", "bogus"])
        assert result.exit_code == 2

    def test_missing_env_exits_2(self, runner):
        result = runner.invoke(main, ["serve"])
        assert result.exit_code == 2

    def test_port_in_use_exits_3(self, runner):
        blocker = socket.create_server(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        try:
            result = runner.invoke(main, ["serve", "--env", "pendulum", "--port", str(port)])
            assert result.exit_code == 3
        finally:
            blocker.close()

    def test_subprocess_serves_and_reports_port(self):
        with ServeProcess("pendulum") as child:
            assert child.port > 0
            sock = socket.create_connection((child.host, child.port), timeout=5)
            sock.close()


class TestParity:
    def test_parity_ok_exits_0(self, runner):
        result = runner.invoke(
            main, ["parity", "--env", "gridworld:3x3:n1", "--steps", "25", "--seed", "7"]
        )
        assert result.exit_code == 0, result.output
        assert "parity ok" in result.output

    def test_injected_fault_is_detected(self):
        def tamper(round_index, result):
            if round_index == 3:
                broken = dict(result.reward)
                broken["agent0"] += 1.0
                result.reward = broken
            return result

        divergence = run_parity("gridworld:4x4:n1", steps=8, seed=7, served_hook=tamper)
        assert divergence is not None
        assert divergence.index == 4  # frame 0 is the reset, so round 3 is frame 4
        assert divergence.kind == "step"

    def test_cli_reports_divergence_and_exits_1(self, runner, monkeypatch):
        monkeypatch.setattr(
            harness, "run_parity", lambda *a, **k: Divergence(4, "step", "tampered")
        )
        result = runner.invoke(
            main, ["parity", "--env", "gridworld:3x3:n1", "--steps", "5"]
        )
        assert result.exit_code == 1
        assert "divergence" in result.output

    def test_zero_steps_is_usage_error(self, runner):
        result = runner.invoke(main, ["parity", "--env", "pendulum", "--steps", "0"])
        assert result.exit_code == 2


class TestTrainQ:
    def test_writes_learning_curve_csv(self, runner, tmp_path):
        out = tmp_path / "curve.csv"
        result = runner.invoke(
            main,
            [
                "train-q", "--env", "gridworld:3x3:n1", "--episodes", "40",
                "--eval-every", "20", "--seed", "3", "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "episode,mean_return"
        assert len(lines) == 3
        assert lines[1].startswith("20,")

    def test_rejects_non_gridworld(self, runner):
        result = runner.invoke(main, ["train-q", "--env", "pendulum"])
        assert result.exit_code == 2

    def test_rejects_bad_hyperparameters(self, runner):
        result = runner.invoke(
            main, ["train-q", "--env", "gridworld:3x3:n1", "--alpha", "0"]
        )
        assert result.exit_code == 2


class TestBench:
    def test_zero_steps_is_usage_error(self, runner):
        result = runner.invoke(main, ["bench", "--connect", "127.0.0.1:1", "--steps", "0"])
        assert result.exit_code == 2

    def test_unreachable_exits_3(self, runner, free_port):
        result = runner.invoke(
            main, ["bench", "--connect", f"127.0.0.1:{free_port}", "--steps", "5"]
        )
        assert result.exit_code == 3

    def test_smoke_against_served_pendulum(self, runner):
        with ServeProcess("pendulum") as child:
            result = runner.invoke(
                main, ["bench", "--connect", f"{child.host}:{child.port}", "--steps", "200"]
            )
        assert result.exit_code == 0, result.output
        assert "steps/sec" in result.output
        assert "p99" in result.output
