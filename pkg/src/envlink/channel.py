"""Bi-directional key-value side channel with key-prefix handler dispatch.

The channel rides outside the step/reset flow.  Each environment has exactly
one; messages are small scalars only (large data belongs in observations).
Dispatch picks the handler with the longest registered prefix of the key;
unmatched messages go to the default handler or are counted as dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .errors import (
    ChannelClosed,
    ChannelExists,
    DuplicatePrefix,
    InvalidKey,
    UnsupportedValueTag,
)
from .values import INT64_MAX, INT64_MIN, Value

Handler = Callable[["SideChannelMessage"], None]


@dataclass(frozen=True)
class SideChannelMessage:
    key: str
    value: Value


def check_payload(key: str, value: Value) -> None:
    """Validate a side-channel message: non-empty string key, scalar value."""
    if not isinstance(key, str) or not key:
        raise InvalidKey(f"side-channel key must be a non-empty string, got {key!r}")
    if not isinstance(value, (bool, int, float, str, bytes)):
        raise UnsupportedValueTag(
            f"side-channel value must be Bool/Int/Float/Str/Bytes, got {type(value).__name__}"
        )
    if isinstance(value, int) and not isinstance(value, bool):
        if not (INT64_MIN <= value <= INT64_MAX):
            raise UnsupportedValueTag(f"int {value} outside 64-bit signed range")


class ChannelEnd:
    """One end of a channel: sends to its peer, dispatches what the peer sends.

    Handlers run serially on the delivering caller's thread and must not block.
    """

    def __init__(self):
        self._handlers: dict[str, Handler] = {}
        self._default: Optional[Handler] = None
        self._dropped = 0
        self._closed = False
        self._peer: Optional["ChannelEnd"] = None

    # -- sending ---------------------------------------------------------

    def send(self, key: str, value: Value) -> None:
        if self._closed:
            raise ChannelClosed("side channel is closed")
        check_payload(key, value)
        self._transmit(key, value)

    def _transmit(self, key: str, value: Value) -> None:
        if self._peer is None:
            raise ChannelClosed("side channel has no peer")
        self._peer.deliver(SideChannelMessage(key, value))

    # -- receiving -------------------------------------------------------

    def register(self, prefix: str, handler: Handler) -> None:
        if not isinstance(prefix, str):
            raise InvalidKey(f"prefix must be a string, got {prefix!r}")
        if prefix in self._handlers:
            raise DuplicatePrefix(f"prefix {prefix!r} already registered")
        self._handlers[prefix] = handler

    def set_default_handler(self, handler: Optional[Handler]) -> None:
        self._default = handler

    def deliver(self, message: SideChannelMessage) -> None:
        """Dispatch an incoming message to the longest matching prefix handler."""
        if self._closed:
            return
        best = None
        for prefix in self._handlers:
            if message.key.startswith(prefix):
                if best is None or len(prefix) > len(best):
                    best = prefix
        if best is not None:
            self._handlers[best](message)
        elif self._default is not None:
            self._default(message)
        else:
            self._dropped += 1

    @property
    def dropped(self) -> int:
        """Messages received with no matching handler and no default."""
        return self._dropped

    @property
    def closed(self) -> bool:
        return self._closed

    def close(self) -> None:
        self._closed = True


def channel_pair() -> tuple[ChannelEnd, ChannelEnd]:
    """Two connected ends; what one sends, the other dispatches."""
    a, b = ChannelEnd(), ChannelEnd()
    a._peer, b._peer = b, a
    return a, b


class SideChannel:
    """The caller-facing side channel of one environment.

    Constructing it claims the environment's single channel slot; a second
    construction raises :class:`ChannelExists`.
    """

    def __init__(self, env):
        self._end = env._claim_side_channel(self)

    def send(self, key: str, value: Value) -> None:
        self._end.send(key, value)

    def register(self, prefix: str, handler: Handler) -> None:
        self._end.register(prefix, handler)

    def set_default_handler(self, handler: Optional[Handler]) -> None:
        self._end.set_default_handler(handler)

    @property
    def dropped(self) -> int:
        return self._end.dropped

    @property
    def closed(self) -> bool:
        return self._end.closed

    def close(self) -> None:
        self._end.close()


__all__ = [
    "ChannelEnd",
    "Handler",
    "SideChannel",
    "SideChannelMessage",
    "channel_pair",
    "check_payload",
    "ChannelExists",
]
