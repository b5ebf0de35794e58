"""Rollout, parity, and benchmark drivers shared by the CLI and the tests.

A trajectory is recorded as the canonical wire encoding of each result
(ResetResult / StepResultMsg frames), so "identical trajectories" means
byte-identical frames, the same criterion the protocol itself guarantees
between server and clients.
"""

from __future__ import annotations

import json
import re
import subprocess
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, TextIO

from . import wire
from .envs import make_env
from .errors import ConfigError, ConnectionRefused
from .model import Environment, StepResult
from .prng import SplitMix64
from .remote import RemoteConfig, connect
from .server import Server
from .spaces import sample
from .values import Tensor, Value


def parse_hostport(text: str) -> tuple[str, int]:
    """Parse "host:port" or bare "host" (port falls back to the default)."""
    host, sep, port = text.rpartition(":")
    if not sep:
        return text, wire.default_port()
    try:
        return host, int(port)
    except ValueError:
        raise ConfigError(f"invalid port in {text!r}") from None


def open_env(
    env_spec: Optional[str] = None,
    connect_to: Optional[str] = None,
    request_timeout: float = 60.0,
) -> Environment:
    """Environment facade for a builtin spec or a served address."""
    if (env_spec is None) == (connect_to is None):
        raise ConfigError("exactly one of env_spec or connect_to is required")
    if env_spec is not None:
        return make_env(env_spec)
    host, port = parse_hostport(connect_to)
    adapter = connect(RemoteConfig(address=host, port=port, request_timeout=request_timeout))
    return Environment(adapter)


def value_to_record(v: Value):
    """Human-inspectable JSON form used in rollout records (one-way)."""
    if isinstance(v, (bool, int, float, str)):
        return v
    if isinstance(v, bytes):
        return {"bytes": v.hex()}
    if isinstance(v, Tensor):
        return {"dtype": v.dtype, "shape": list(v.shape), "data": v.tolist()}
    if isinstance(v, list):
        return [value_to_record(x) for x in v]
    if isinstance(v, dict):
        return {k: value_to_record(x) for k, x in v.items()}
    raise ConfigError(f"unsupported value type {type(v).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class Trajectory:
    """Canonical frames plus the raw results of one policy run."""

    frames: list[bytes] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)  # "reset" | "step", per frame
    records: list[str] = field(default_factory=list)  # JSONL lines, steps only

    def append_reset(self, observation, info) -> None:
        self.frames.append(
            wire.encode_message(wire.ResetResult(observation=observation, info=info))
        )
        self.kinds.append("reset")

    def append_step(self, round_index: int, actions, result: StepResult) -> None:
        self.frames.append(
            wire.encode_message(
                wire.StepResultMsg(
                    observation=result.observation,
                    reward=result.reward,
                    done=result.done,
                    last_action=result.last_action,
                    info=result.info,
                )
            )
        )
        self.kinds.append("step")
        self.records.append(
            _dump(
                {
                    "round": round_index,
                    "actions": {k: value_to_record(v) for k, v in actions.items()},
                    "rewards": dict(result.reward),
                    "dones": dict(result.done),
                }
            )
        )


StepHook = Callable[[int, StepResult], StepResult]


def run_rollout(
    env: Environment,
    steps: int,
    seed: int,
    out: Optional[TextIO] = None,
    step_hook: Optional[StepHook] = None,
) -> Trajectory:
    """Seeded random-policy rollout of *steps* environment ticks.

    The policy stream is one pinned PRNG seeded with *seed*, sampling each
    agent's action space in sorted-agent order every round.  When a step
    leaves every agent done, the next round is preceded by reset(seed); the
    policy stream continues uninterrupted.  *step_hook* (tests only) may
    replace a result before recording.
    """
    trajectory = Trajectory()
    policy = SplitMix64(seed)
    observation, info = env.reset(seed)
    trajectory.append_reset(observation, info)
    action_space = env.action_space
    agents = env.agents
    needs_reset = False
    for round_index in range(steps):
        if needs_reset:
            observation, info = env.reset(seed)
            trajectory.append_reset(observation, info)
        actions = {agent: sample(action_space[agent], policy) for agent in agents}
        result = env.step(actions)
        if step_hook is not None:
            result = step_hook(round_index, result)
        trajectory.append_step(round_index, actions, result)
        needs_reset = result.all_done
        if out is not None:
            out.write(trajectory.records[-1] + "\n")
    return trajectory


@dataclass
class Divergence:
    index: int
    kind: str
    reason: str

    def __str__(self) -> str:
        return f"first divergence at {self.kind} frame {self.index}: {self.reason}"


def compare_trajectories(label_a: str, a: Trajectory, label_b: str, b: Trajectory) -> Optional[Divergence]:
    """First frame where two trajectories differ, or None when identical."""
    for i, (fa, fb) in enumerate(zip(a.frames, b.frames)):
        if fa != fb:
            kind = a.kinds[i]
            return Divergence(i, kind, f"{label_a} and {label_b} frames differ ({len(fa)} vs {len(fb)} bytes)")
    if len(a.frames) != len(b.frames):
        return Divergence(
            min(len(a.frames), len(b.frames)),
            "length",
            f"{label_a} has {len(a.frames)} frames, {label_b} has {len(b.frames)}",
        )
    return None


_LISTEN_RE = re.compile(r"listening on ([^:\s]+):(\d+)")


class ServeProcess:
    """`envlink serve` in a child process, for same-host-another-process runs."""

    def __init__(self, env_spec: str, barrier_timeout: float = 30.0):
        self._proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "envlink",
                "serve",
                "--env",
                env_spec,
                "--bind",
                "127.0.0.1",
                "--port",
                "0",
                "--barrier-timeout",
                str(barrier_timeout),
            ],
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
        )
        line = self._proc.stdout.readline()
        m = _LISTEN_RE.search(line or "")
        if not m:
            self._proc.kill()
            raise ConnectionRefused(f"serve subprocess failed to start: {line!r}")
        self.host, self.port = m.group(1), int(m.group(2))

    def stop(self) -> None:
        self._proc.terminate()
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "ServeProcess":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def run_parity(
    env_spec: str,
    steps: int,
    seed: int,
    served_hook: Optional[StepHook] = None,
) -> Optional[Divergence]:
    """Compare one policy run across the three execution settings.

    Local facade, a server inside this process reached over loopback, and an
    `envlink serve` child process reached over loopback must produce
    byte-identical trajectories.  *served_hook* lets tests inject a fault into
    the in-process-served path to prove the detector trips.
    """
    local_env = make_env(env_spec)
    try:
        local = run_rollout(local_env, steps, seed)
    finally:
        local_env.close()

    with Server(make_env(env_spec), bind="127.0.0.1", port=0) as server:
        env = open_env(connect_to=f"127.0.0.1:{server.port}")
        try:
            in_process = run_rollout(env, steps, seed, step_hook=served_hook)
        finally:
            env.close()
    divergence = compare_trajectories("local", local, "in-process-served", in_process)
    if divergence is not None:
        return divergence

    with ServeProcess(env_spec) as child:
        env = open_env(connect_to=f"{child.host}:{child.port}")
        try:
            loopback = run_rollout(env, steps, seed)
        finally:
            env.close()
    return compare_trajectories("local", local, "loopback-served", loopback)


@dataclass
class BenchReport:
    rounds: int
    elapsed: float
    latencies: list[float]

    @property
    def steps_per_sec(self) -> float:
        return self.rounds / self.elapsed if self.elapsed > 0 else float("inf")

    def percentile(self, p: float) -> float:
        ordered = sorted(self.latencies)
        idx = min(int(p * len(ordered)), len(ordered) - 1)
        return ordered[idx]

    def __str__(self) -> str:
        return (
            f"rounds: {self.rounds}\n"
            f"steps/sec: {self.steps_per_sec:.1f}\n"
            f"p50 latency: {self.percentile(0.50) * 1000:.3f} ms\n"
            f"p99 latency: {self.percentile(0.99) * 1000:.3f} ms"
        )


def run_bench(connect_to: str, steps: int, seed: int = 0) -> BenchReport:
    """Round-latency benchmark against a served environment."""
    env = open_env(connect_to=connect_to)
    try:
        policy = SplitMix64(seed)
        env.reset(seed)
        action_space = env.action_space
        agents = env.agents
        latencies: list[float] = []
        needs_reset = False
        start = time.perf_counter()
        for _ in range(steps):
            if needs_reset:
                env.reset(seed)
            actions = {agent: sample(action_space[agent], policy) for agent in agents}
            t0 = time.perf_counter()
            result = env.step(actions)
            latencies.append(time.perf_counter() - t0)
            needs_reset = result.all_done
        elapsed = time.perf_counter() - start
    finally:
        env.close()
    return BenchReport(rounds=steps, elapsed=elapsed, latencies=latencies)
