"""Deterministic reference environments: a multi-agent gridworld and the
classic torque-controlled pendulum.

Both are PRNG-driven only at reset; step is a pure function of (state,
actions), which is what makes local-vs-served trajectory comparisons exact.
Selection strings: ``"gridworld:WxH"``, ``"gridworld:WxH:nN"``, ``"pendulum"``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError
from .model import AgentId, Environment, EnvironmentAdapter, StepResult
from .prng import SplitMix64, entropy_seed
from .spaces import Box, Discrete, Space
from .values import Tensor, Value

Cell = tuple[int, int]

# Gridworld moves, indexed by action: 0 Up(+y) 1 Down(-y) 2 Left(-x) 3 Right(+x) 4 Stay
_MOVES: tuple[Cell, ...] = ((0, 1), (0, -1), (-1, 0), (1, 0), (0, 0))

GOAL_REWARD = 10.0
STEP_REWARD = -1.0


def _agent_name(i: int) -> AgentId:
    return f"agent{i}"


@dataclass
class GridworldConfig:
    width: int
    height: int
    agents: int = 1
    starts: Optional[dict[AgentId, Cell]] = None
    goals: Optional[dict[AgentId, Cell]] = None
    max_steps: int = 200

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError("gridworld dimensions must be positive")
        if self.agents < 1:
            raise ConfigError("gridworld needs at least one agent")
        if self.agents > self.width * self.height:
            raise ConfigError("more agents than cells")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be positive")
        names = [_agent_name(i) for i in range(self.agents)]
        if self.starts is None:
            self.starts = {n: (i % self.width, 0) for i, n in enumerate(names)}
        if self.goals is None:
            self.goals = {n: (self.width - 1, self.height - 1) for n in names}
        for table, label in ((self.starts, "start"), (self.goals, "goal")):
            if set(table) != set(names):
                raise ConfigError(f"{label} cells must cover exactly the agent set")
            for cell in table.values():
                x, y = cell
                if not (0 <= x < self.width and 0 <= y < self.height):
                    raise ConfigError(f"{label} cell {cell} out of bounds")


class GridworldAdapter(EnvironmentAdapter):
    """Agents walk a WxH grid toward per-agent goals.

    Moves off the grid clamp to the current cell; agents move simultaneously
    and may overlap.  Reward is -1 per step and +10 on the step that reaches
    the agent's goal; a done agent freezes and earns 0.  All agents become
    done when max_steps is reached.
    """

    def __init__(self, config: GridworldConfig):
        super().__init__()
        self._cfg = config
        self._names = tuple(_agent_name(i) for i in range(config.agents))
        obs_high = (config.width - 1, config.height - 1)
        self._obs_space = {
            n: Box.of((0, 0), obs_high, shape=(2,), dtype="i64") for n in self._names
        }
        self._act_space: dict[AgentId, Space] = {n: Discrete(5) for n in self._names}
        self._pos: dict[AgentId, Cell] = {}
        self._done: dict[AgentId, bool] = {}
        self._steps = 0

    def reset(self, seed: Optional[int] = None):
        # Start cells are fixed by config; the seed only matters for envs with
        # randomized initial state.
        self._pos = dict(self._cfg.starts)
        self._done = {n: False for n in self._names}
        self._steps = 0
        return self._observe(), {}

    def step(self, actions: dict[AgentId, Value]) -> StepResult:
        reward: dict[AgentId, float] = {}
        self._steps += 1
        for name in self._names:
            if self._done[name]:
                reward[name] = 0.0
                continue
            dx, dy = _MOVES[actions[name]]
            x, y = self._pos[name]
            nx = min(max(x + dx, 0), self._cfg.width - 1)
            ny = min(max(y + dy, 0), self._cfg.height - 1)
            self._pos[name] = (nx, ny)
            if (nx, ny) == self._cfg.goals[name]:
                reward[name] = GOAL_REWARD
                self._done[name] = True
            else:
                reward[name] = STEP_REWARD
        if self._steps >= self._cfg.max_steps:
            self._done = {n: True for n in self._names}
        return StepResult(
            observation=self._observe(),
            reward=reward,
            done=dict(self._done),
            last_action=dict(actions),
            info={},
        )

    def _observe(self) -> dict[AgentId, Value]:
        return {n: Tensor(self._pos[n], dtype="i64") for n in self._names}

    @property
    def observation_space(self) -> dict[AgentId, Space]:
        return self._obs_space

    @property
    def action_space(self) -> dict[AgentId, Space]:
        return self._act_space


@dataclass
class PendulumConfig:
    g: float = 10.0
    m: float = 1.0
    l: float = 1.0
    dt: float = 0.05
    max_torque: float = 2.0
    max_speed: float = 8.0
    max_steps: int = 200

    def __post_init__(self):
        for name in ("g", "m", "l", "dt", "max_torque", "max_speed", "max_steps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"pendulum {name} must be positive")


def wrap_angle(x: float) -> float:
    """Map an angle into (-pi, pi]."""
    w = math.fmod(x + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


class PendulumAdapter(EnvironmentAdapter):
    """Single-agent torque-controlled pendulum swing-up.

    State is (theta, theta_dot); reset draws theta uniform in [-pi, pi] then
    theta_dot uniform in [-1, 1] from the seeded stream.  Cost is quadratic in
    the wrapped post-update angle, the post-update velocity, and the clamped
    torque, so reward <= 0 with equality only at the upright rest point.
    """

    AGENT: AgentId = "agent0"

    def __init__(self, config: PendulumConfig | None = None):
        super().__init__()
        self._cfg = config or PendulumConfig()
        c = self._cfg
        self._obs_space = {
            self.AGENT: Box.of(
                (-1.0, -1.0, -c.max_speed), (1.0, 1.0, c.max_speed), shape=(3,)
            )
        }
        self._act_space = {
            self.AGENT: Box.of(-c.max_torque, c.max_torque, shape=(1,))
        }
        self._theta = 0.0
        self._theta_dot = 0.0
        self._steps = 0

    def reset(self, seed: Optional[int] = None):
        rng = SplitMix64(seed if seed is not None else entropy_seed())
        self._theta = -math.pi + rng.uniform() * (2.0 * math.pi)
        self._theta_dot = -1.0 + rng.uniform() * 2.0
        self._steps = 0
        return {self.AGENT: self._observe()}, {}

    def step(self, actions: dict[AgentId, Value]) -> StepResult:
        c = self._cfg
        torque = float(actions[self.AGENT].array[0])
        a = min(max(torque, -c.max_torque), c.max_torque)
        new_dot = (
            self._theta_dot
            + (3.0 * c.g / (2.0 * c.l)) * math.sin(self._theta) * c.dt
            + (3.0 / (c.m * c.l * c.l)) * a * c.dt
        )
        new_dot = min(max(new_dot, -c.max_speed), c.max_speed)
        new_theta = self._theta + new_dot * c.dt
        reward = -(wrap_angle(new_theta) ** 2 + 0.1 * new_dot ** 2 + 0.001 * a * a)
        self._theta, self._theta_dot = new_theta, new_dot
        self._steps += 1
        done = self._steps >= c.max_steps
        return StepResult(
            observation={self.AGENT: self._observe()},
            reward={self.AGENT: reward},
            done={self.AGENT: done},
            last_action=dict(actions),
            info={},
        )

    def _observe(self) -> Tensor:
        return Tensor(
            (math.cos(self._theta), math.sin(self._theta), self._theta_dot),
            dtype="f64",
        )

    @property
    def observation_space(self) -> dict[AgentId, Space]:
        return self._obs_space

    @property
    def action_space(self) -> dict[AgentId, Space]:
        return self._act_space


_GRIDWORLD_RE = re.compile(r"^gridworld:(\d+)x(\d+)(?::n(\d+))?$")


def make_adapter(spec: str) -> EnvironmentAdapter:
    """Build a builtin adapter from a selection string."""
    if spec == "pendulum":
        return PendulumAdapter()
    m = _GRIDWORLD_RE.match(spec)
    if m:
        width, height = int(m.group(1)), int(m.group(2))
        agents = int(m.group(3)) if m.group(3) else 1
        return GridworldAdapter(GridworldConfig(width, height, agents))
    raise ConfigError(
        f"unknown environment spec {spec!r}; expected 'pendulum' or 'gridworld:WxH[:nN]'"
    )


def make_env(spec: str) -> Environment:
    """Build a facade over a builtin adapter from a selection string."""
    return Environment(make_adapter(spec))
