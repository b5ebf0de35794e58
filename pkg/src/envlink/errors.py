"""Error taxonomy shared by the environment model, the wire protocol, and the server.

Every error the toolkit raises derives from :class:`EnvlinkError`.  Errors that
can cross the wire carry a stable numeric code (see ``ERROR_CODES``) so a
client reconstructs the exact class the server raised.
"""

from __future__ import annotations


class EnvlinkError(Exception):
    """Base class for every toolkit error."""


# --- environment contract ---------------------------------------------------

class EnvClosed(EnvlinkError):
    """Operation invoked after close()."""


class NotReset(EnvlinkError):
    """step() called before the first reset()."""


class EpisodeOver(EnvlinkError):
    """step() called while every agent is already done."""


class MissingAgent(EnvlinkError):
    """Submitted action keys differ from the required agent set."""


class SpaceMismatch(EnvlinkError):
    """An action or observation violates its declared space."""


class EnvError(EnvlinkError):
    """Generic failure propagated from an environment adapter."""


class ConfigError(EnvlinkError):
    """Invalid configuration (env spec string, timeouts, bounds)."""


class MultiAgentUnsupported(EnvlinkError):
    """The single-agent wrapper was given a multi-agent environment."""


# --- side channel ------------------------------------------------------------

class ChannelClosed(EnvlinkError):
    """send() on a closed side channel."""


class ChannelExists(EnvlinkError):
    """A second side channel was constructed for one environment."""


class InvalidKey(EnvlinkError):
    """Side-channel key is empty or not a string."""


class UnsupportedValueTag(EnvlinkError):
    """Side-channel payload is not one of Bool/Int/Float/Str/Bytes."""


class DuplicatePrefix(EnvlinkError):
    """register() called with an already-registered prefix."""


# --- wire protocol -----------------------------------------------------------

class WireError(EnvlinkError):
    """Base class for encoding/decoding failures."""


class Malformed(WireError):
    """Truncated input, bad tag, bad dimensions, or invalid field content."""


class TrailingBytes(WireError):
    """Decoding consumed less than the whole buffer."""


class Oversize(WireError):
    """Frame length exceeds the 64 MiB protocol limit."""


class UnknownType(WireError):
    """Unknown message type byte."""


# --- client/server -----------------------------------------------------------

class ProtocolError(EnvlinkError):
    """Peer violated the protocol state machine."""


class VersionMismatch(EnvlinkError):
    """Hello carried an unsupported protocol version."""


class AgentTaken(EnvlinkError):
    """Claimed agent is already owned by another connection."""


class UnknownAgent(EnvlinkError):
    """Claimed agent id is not part of the served environment."""


class NotOwner(EnvlinkError):
    """Submitted an action for an agent this connection does not own."""


class BarrierTimeout(EnvlinkError):
    """A barrier round did not complete within the server's timeout."""


class RoundAborted(EnvlinkError):
    """A collecting step round was aborted by a reset request."""


class ClientLost(EnvlinkError):
    """Another client disconnected while a round was collecting."""


class ConnectionLost(EnvlinkError):
    """The transport broke mid-session."""


class ConnectionRefused(EnvlinkError):
    """The server was unreachable within the connect timeout."""


class BindFailure(EnvlinkError):
    """The server could not bind its listen address."""


# Stable wire codes for errors the server reports to clients.  Codes are part
# of protocol v1; never renumber.
ERROR_CODES: dict[type[EnvlinkError], int] = {
    VersionMismatch: 1,
    AgentTaken: 2,
    UnknownAgent: 3,
    NotOwner: 4,
    BarrierTimeout: 5,
    RoundAborted: 6,
    ClientLost: 7,
    ProtocolError: 8,
    NotReset: 9,
    EpisodeOver: 10,
    MissingAgent: 11,
    SpaceMismatch: 12,
    EnvClosed: 13,
    EnvError: 14,
}

CODE_TO_ERROR: dict[int, type[EnvlinkError]] = {v: k for k, v in ERROR_CODES.items()}


def error_code_for(exc: EnvlinkError) -> int:
    """Wire code for *exc*, falling back to the generic EnvError code."""
    return ERROR_CODES.get(type(exc), ERROR_CODES[EnvError])


def error_from_code(code: int, message: str) -> EnvlinkError:
    """Reconstruct the exception class a peer reported."""
    cls = CODE_TO_ERROR.get(code, EnvError)
    return cls(message)
