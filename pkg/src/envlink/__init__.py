"""envlink: multi-agent environments behind one interface, local or served.

An :class:`Environment` facade fronts any :class:`EnvironmentAdapter` --
builtin simulations, or a :func:`connect`-ed remote served by
:func:`serve` -- with bit-identical behavior either way.
"""

from .channel import SideChannel, SideChannelMessage
from .envs import (
    GridworldAdapter,
    GridworldConfig,
    PendulumAdapter,
    PendulumConfig,
    make_adapter,
    make_env,
)
from .errors import EnvlinkError
from .gymwrap import SingleAgentView, wrap
from .model import AgentId, Environment, EnvironmentAdapter, StepResult
from .prng import SplitMix64
from .remote import RemoteAdapter, RemoteConfig, connect
from .server import Server, serve
from .spaces import Box, Discrete, Space
from .values import Tensor, Value

__all__ = [
    "AgentId",
    "Box",
    "Discrete",
    "Environment",
    "EnvironmentAdapter",
    "EnvlinkError",
    "GridworldAdapter",
    "GridworldConfig",
    "PendulumAdapter",
    "PendulumConfig",
    "RemoteAdapter",
    "RemoteConfig",
    "Server",
    "SideChannel",
    "SideChannelMessage",
    "SingleAgentView",
    "Space",
    "SplitMix64",
    "StepResult",
    "Tensor",
    "Value",
    "connect",
    "make_adapter",
    "make_env",
    "serve",
    "wrap",
]

__version__ = "0.1.0"
