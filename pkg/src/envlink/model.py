"""Core environment abstraction: per-agent step results, the adapter contract,
and the :class:`Environment` facade that fronts any adapter.

Everything is multi-agent by default: inputs and outputs are maps keyed by
agent id.  A step result carries five fields -- observation, reward, done,
last_action, and a shared info map -- where ``last_action`` echoes the action
map actually applied, so a client controlling a subset of agents still sees
what every agent did.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional

from .channel import ChannelEnd, SideChannel, channel_pair
from .errors import (
    ChannelExists,
    EnvClosed,
    EpisodeOver,
    MissingAgent,
    NotReset,
    SpaceMismatch,
)
from .spaces import Space, contains
from .values import Value

AgentId = str


@dataclass
class StepResult:
    """Outcome of one environment tick.

    The four per-agent maps share one key set: the environment's agent set.
    ``info`` is a single map shared by all agents.
    """

    observation: dict[AgentId, Value]
    reward: dict[AgentId, float]
    done: dict[AgentId, bool]
    last_action: dict[AgentId, Value]
    info: dict[str, Value] = field(default_factory=dict)

    @property
    def all_done(self) -> bool:
        return all(self.done.values())


class EnvironmentAdapter(ABC):
    """Behavioral contract an environment backend implements.

    Adapters are single-caller: operations must not run concurrently.  The
    :class:`Environment` facade layers the generic contract checks (reset
    before step, closed-state errors, action validation) on top, so adapters
    implement raw dynamics only.
    """

    def __init__(self):
        self._user_end, self._env_end = channel_pair()

    @abstractmethod
    def reset(self, seed: Optional[int] = None) -> tuple[dict[AgentId, Value], dict[str, Value]]:
        """Reinitialize and return (per-agent observation, info)."""

    @abstractmethod
    def step(self, actions: dict[AgentId, Value]) -> StepResult:
        """Advance exactly one tick with a full action map."""

    def close(self) -> None:
        self._user_end.close()
        self._env_end.close()

    @property
    @abstractmethod
    def observation_space(self) -> dict[AgentId, Space]: ...

    @property
    @abstractmethod
    def action_space(self) -> dict[AgentId, Space]: ...

    @property
    def agent_ids(self) -> tuple[AgentId, ...]:
        return tuple(sorted(self.observation_space.keys()))

    @property
    def controllable_agents(self) -> tuple[AgentId, ...]:
        """Agents the local caller must submit actions for (all, unless remote)."""
        return self.agent_ids

    @property
    def user_channel_end(self) -> ChannelEnd:
        """Side-channel end the environment's user talks through."""
        return self._user_end

    @property
    def env_channel_end(self) -> Optional[ChannelEnd]:
        """Side-channel end owned by the environment logic (None when remote)."""
        return self._env_end


class Environment:
    """Facade fronting any adapter: local, built-in, or remote.

    Enforces the calling contract (reset before step, full action maps,
    space conformance, closed/finished-episode errors) and owns the
    environment's single side channel.
    """

    def __init__(self, adapter: EnvironmentAdapter):
        self._adapter = adapter
        self._closed = False
        self._was_reset = False
        self._all_done = False
        self._channel: Optional[SideChannel] = None

    # -- simulation flow ---------------------------------------------------

    def reset(self, seed: Optional[int] = None) -> tuple[dict[AgentId, Value], dict[str, Value]]:
        self._ensure_open()
        if seed is not None and not (0 <= seed < 1 << 64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        observation, info = self._adapter.reset(seed)
        self._was_reset = True
        self._all_done = False
        return observation, info

    def step(self, actions: dict[AgentId, Value]) -> StepResult:
        self._ensure_open()
        if not self._was_reset:
            raise NotReset("reset() must be called before step()")
        if self._all_done:
            raise EpisodeOver("every agent is done; reset() to start a new episode")
        required = set(self._adapter.controllable_agents)
        submitted = set(actions.keys())
        if submitted != required:
            missing = sorted(required - submitted)
            extra = sorted(submitted - required)
            raise MissingAgent(
                f"action keys must equal the agent set; missing={missing} unexpected={extra}"
            )
        action_space = self._adapter.action_space
        for agent in sorted(actions):
            if not contains(action_space[agent], actions[agent]):
                raise SpaceMismatch(
                    f"action for {agent!r} violates its space: {actions[agent]!r}"
                )
        result = self._adapter.step(actions)
        self._all_done = result.all_done
        return result

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        if self._channel is not None:
            self._channel.close()
        self._adapter.close()

    # -- introspection -------------------------------------------------------

    @property
    def observation_space(self) -> dict[AgentId, Space]:
        self._ensure_open()
        return dict(self._adapter.observation_space)

    @property
    def action_space(self) -> dict[AgentId, Space]:
        self._ensure_open()
        return dict(self._adapter.action_space)

    @property
    def agents(self) -> tuple[AgentId, ...]:
        self._ensure_open()
        return self._adapter.agent_ids

    @property
    def closed(self) -> bool:
        return self._closed

    # -- side channel ----------------------------------------------------------

    @property
    def side_channel(self) -> SideChannel:
        """The environment's single side channel (claimed on first access)."""
        if self._channel is None:
            SideChannel(self)
        return self._channel

    def _claim_side_channel(self, channel: SideChannel) -> ChannelEnd:
        if self._channel is not None:
            raise ChannelExists("this environment already has its side channel")
        self._ensure_open()
        self._channel = channel
        return self._adapter.user_channel_end

    # -- internals ----------------------------------------------------------

    def _ensure_open(self) -> None:
        if self._closed:
            raise EnvClosed("environment is closed")
