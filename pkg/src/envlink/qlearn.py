"""Tabular Q-learning on gridworld environments, local or served.

The learner sees the joint state (every agent's cell) and keeps one Q table
per agent over its own actions.  Everything is deterministic given the seed:
exploration draws come from the pinned PRNG in a fixed order (agents sorted,
one draw for the explore/exploit decision, one more only when exploring), and
greedy ties break toward the lowest action index.  Done agents submit Stay
without consuming draws.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .model import Environment
from .prng import SplitMix64
from .spaces import Discrete
from .values import Tensor

STAY = 4  # gridworld no-op action, submitted for agents that are already done

State = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class QLearnerConfig:
    alpha: float = 0.1
    gamma: float = 0.99
    epsilon: float = 0.1
    episodes: int = 500
    eval_every: int = 50
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError("alpha must be in (0, 1]")
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError("gamma must be in (0, 1]")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigError("epsilon must be in [0, 1]")
        if self.episodes < 1 or self.eval_every < 1:
            raise ConfigError("episodes and eval_every must be positive")


def _joint_state(observation: dict[str, Tensor], agents: tuple[str, ...]) -> State:
    return tuple((int(observation[a].array[0]), int(observation[a].array[1])) for a in agents)


def _greedy(q_row: list[float]) -> int:
    best = 0
    for a in range(1, len(q_row)):
        if q_row[a] > q_row[best]:
            best = a
    return best


class QLearner:
    """Per-agent tabular Q over the joint gridworld state."""

    def __init__(self, env: Environment, config: QLearnerConfig):
        self._env = env
        self._cfg = config
        self._agents = env.agents
        self._n_actions: dict[str, int] = {}
        for agent, space in env.action_space.items():
            if not isinstance(space, Discrete):
                raise ConfigError("Q-learning requires Discrete action spaces")
            self._n_actions[agent] = space.n
        self._q: dict[str, dict[State, list[float]]] = {a: {} for a in self._agents}

    def _q_row(self, agent: str, state: State) -> list[float]:
        table = self._q[agent]
        row = table.get(state)
        if row is None:
            row = [0.0] * self._n_actions[agent]
            table[state] = row
        return row

    def _pick_actions(
        self, state: State, done: dict[str, bool], rng: SplitMix64
    ) -> dict[str, int]:
        actions: dict[str, int] = {}
        for agent in self._agents:
            if done[agent]:
                actions[agent] = STAY
                continue
            n = self._n_actions[agent]
            if rng.uniform() < self._cfg.epsilon:
                actions[agent] = int(rng.uniform() * n)
            else:
                actions[agent] = _greedy(self._q_row(agent, state))
        return actions

    def train(self) -> list[tuple[int, float]]:
        """Run the configured episodes; returns (episode, mean greedy return) rows."""
        cfg = self._cfg
        rng = SplitMix64(cfg.seed)
        curve: list[tuple[int, float]] = []
        for episode in range(1, cfg.episodes + 1):
            observation, _ = self._env.reset(cfg.seed)
            state = _joint_state(observation, self._agents)
            done = {a: False for a in self._agents}
            while not all(done.values()):
                actions = self._pick_actions(state, done, rng)
                result = self._env.step(actions)
                next_state = _joint_state(result.observation, self._agents)
                for agent in self._agents:
                    if done[agent]:
                        continue
                    row = self._q_row(agent, state)
                    a = actions[agent]
                    target = result.reward[agent]
                    if not result.done[agent]:
                        target += cfg.gamma * max(self._q_row(agent, next_state))
                    row[a] += cfg.alpha * (target - row[a])
                state = next_state
                done = dict(result.done)
            if episode % cfg.eval_every == 0:
                curve.append((episode, self.evaluate()))
        return curve

    def evaluate(self) -> float:
        """One greedy rollout; returns the mean per-agent undiscounted return."""
        observation, _ = self._env.reset(self._cfg.seed)
        state = _joint_state(observation, self._agents)
        done = {a: False for a in self._agents}
        returns = {a: 0.0 for a in self._agents}
        while not all(done.values()):
            actions = {
                a: (STAY if done[a] else _greedy(self._q_row(a, state)))
                for a in self._agents
            }
            result = self._env.step(actions)
            for agent in self._agents:
                returns[agent] += result.reward[agent]
            state = _joint_state(result.observation, self._agents)
            done = dict(result.done)
        return sum(returns.values()) / len(returns)


def train(env: Environment, config: QLearnerConfig) -> list[tuple[int, float]]:
    """Train a learner on *env*; returns the learning-curve rows."""
    return QLearner(env, config).train()


def curve_to_csv(curve: list[tuple[int, float]]) -> str:
    lines = ["episode,mean_return"]
    for episode, mean_return in curve:
        lines.append(f"{episode},{mean_return!r}")
    return "\n".join(lines) + "\n"
