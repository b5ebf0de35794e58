"""Classic four-tuple single-agent view over a one-agent environment facade.

``step`` returns (observation, reward, done, info) and ``reset`` returns the
observation alone; the per-agent maps are unwrapped and the last_action field
is dropped, since the four-tuple interface has no slot for it.
"""

from __future__ import annotations

from typing import Optional

from .errors import MultiAgentUnsupported
from .model import Environment
from .spaces import Space
from .values import Value


class SingleAgentView:
    """Single-agent adapter-pattern view of an :class:`Environment`."""

    def __init__(self, env: Environment):
        agents = env.agents
        if len(agents) != 1:
            raise MultiAgentUnsupported(
                f"single-agent view requires exactly one agent, found {len(agents)}"
            )
        self._env = env
        self._agent = agents[0]

    def reset(self, seed: Optional[int] = None) -> Value:
        observation, _info = self._env.reset(seed)
        return observation[self._agent]

    def step(self, action: Value) -> tuple[Value, float, bool, dict[str, Value]]:
        result = self._env.step({self._agent: action})
        return (
            result.observation[self._agent],
            result.reward[self._agent],
            result.done[self._agent],
            result.info,
        )

    def close(self) -> None:
        self._env.close()

    @property
    def observation_space(self) -> Space:
        return self._env.observation_space[self._agent]

    @property
    def action_space(self) -> Space:
        return self._env.action_space[self._agent]

    @property
    def agent(self) -> str:
        return self._agent


def wrap(env: Environment) -> SingleAgentView:
    """Wrap a one-agent environment facade in the four-tuple interface."""
    return SingleAgentView(env)
