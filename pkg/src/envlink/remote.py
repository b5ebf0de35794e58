"""Client-side adapter whose operations are fulfilled by a server over TCP.

Wrapped in the :class:`~envlink.model.Environment` facade, a served
environment is indistinguishable from a local one: same operations, same
results, same error taxonomy.  A connection is single-caller (one in-flight
request); a background reader delivers unsolicited broadcasts (side-channel
messages, round aborts) as they arrive.  There are no silent retries: a broken
connection is a hard error.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
from dataclasses import dataclass, field
from typing import Optional

from . import wire
from .channel import ChannelEnd, SideChannelMessage, check_payload
from .errors import (
    ChannelClosed,
    ConfigError,
    ConnectionLost,
    ConnectionRefused,
    EnvClosed,
    ProtocolError,
    error_from_code,
)
from .model import AgentId, EnvironmentAdapter, StepResult
from .spaces import Space
from .values import Value

logger = logging.getLogger("envlink.remote")


@dataclass(frozen=True)
class RemoteConfig:
    address: str = "127.0.0.1"
    port: int = field(default_factory=wire.default_port)
    claimed_agents: tuple[AgentId, ...] = ()
    connect_timeout: float = 10.0
    request_timeout: float = 60.0

    def __post_init__(self):
        if not (0 < self.port < 65536):
            raise ConfigError(f"port must be in (0, 65536), got {self.port}")
        if self.connect_timeout <= 0 or self.request_timeout <= 0:
            raise ConfigError("timeouts must be positive")


class _WireChannelEnd(ChannelEnd):
    """Side-channel end whose peer lives on the server."""

    def __init__(self, adapter: "RemoteAdapter"):
        super().__init__()
        self._adapter = adapter

    def _transmit(self, key: str, value: Value) -> None:
        self._adapter._send_side_channel(key, value)


class _Lost:
    """Reader sentinel: connection broke while a request was in flight."""

    def __init__(self, reason: str):
        self.reason = reason


class RemoteAdapter(EnvironmentAdapter):
    """EnvironmentAdapter served over the wire protocol.

    Build with :func:`connect`.  ``step`` blocks until the server's barrier
    round completes and always returns every agent's fields, even when this
    client claimed only a subset.
    """

    def __init__(self, config: RemoteConfig):
        super().__init__()
        self._config = config
        self._closed = False
        self._broken: Optional[str] = None
        self._lock = threading.Lock()
        self._waiting = False
        self._replies: queue.Queue = queue.Queue()

        try:
            self._sock = socket.create_connection(
                (config.address, config.port), timeout=config.connect_timeout
            )
        except OSError as exc:
            raise ConnectionRefused(
                f"cannot reach {config.address}:{config.port}: {exc}"
            ) from exc
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

        ack = self._handshake()
        self._owned: tuple[AgentId, ...] = ack.agents
        self._obs_space: dict[AgentId, Space] = dict(ack.observation_space)
        self._act_space: dict[AgentId, Space] = dict(ack.action_space)
        self._barrier_timeout = ack.barrier_timeout_ms / 1000.0
        if config.request_timeout <= self._barrier_timeout:
            self._sock.close()
            raise ConfigError(
                f"request_timeout ({config.request_timeout}s) must exceed the "
                f"server's barrier timeout ({self._barrier_timeout}s)"
            )

        # Replace the in-process pair from the base class: sends go to the
        # wire, deliveries come from the reader thread.
        self._user_end = _WireChannelEnd(self)
        self._env_end = None

        self._reader = threading.Thread(
            target=self._reader_loop, name="envlink-client-reader", daemon=True
        )
        self._reader.start()

    # -- connection setup ------------------------------------------------------

    def _handshake(self) -> wire.HelloAck:
        self._sock.settimeout(self._config.connect_timeout)
        try:
            self._sock.sendall(
                wire.encode_message(
                    wire.Hello(version=wire.PROTOCOL_VERSION, agents=self._config.claimed_agents)
                )
            )
            decoder = wire.StreamDecoder()
            while True:
                data = self._sock.recv(65536)
                if not data:
                    raise ConnectionLost("server closed the connection during handshake")
                msgs = decoder.feed(data)
                if msgs:
                    reply = msgs[0]
                    break
        except (OSError, wire.WireError) as exc:
            self._sock.close()
            raise ConnectionLost(f"handshake failed: {exc}") from exc
        except Exception:
            self._sock.close()
            raise
        if isinstance(reply, wire.ErrorMsg):
            self._sock.close()
            raise error_from_code(reply.code, reply.message)
        if not isinstance(reply, wire.HelloAck):
            self._sock.close()
            raise ProtocolError(f"expected HelloAck, got {type(reply).__name__}")
        self._sock.settimeout(None)
        return reply

    def _reader_loop(self) -> None:
        decoder = wire.StreamDecoder()
        reason = "connection closed by server"
        try:
            while True:
                data = self._sock.recv(65536)
                if not data:
                    break
                for msg in decoder.feed(data):
                    self._route(msg)
        except OSError as exc:
            reason = f"socket error: {exc}"
        except wire.WireError as exc:
            reason = f"protocol violation from server: {exc}"
        with self._lock:
            if self._broken is None:
                self._broken = reason
            if self._waiting:
                self._replies.put(_Lost(reason))
        self._user_end.close()

    def _route(self, msg: wire.Message) -> None:
        if isinstance(msg, wire.SideChannelMsg):
            try:
                self._user_end.deliver(SideChannelMessage(msg.key, msg.value))
            except Exception:
                logger.exception("side-channel handler failed for key %r", msg.key)
            return
        with self._lock:
            if self._waiting:
                self._replies.put(msg)
                return
        # Unsolicited round errors (e.g. a barrier timeout for a round this
        # client never joined) carry no state for us.
        logger.debug("dropping unsolicited %s", type(msg).__name__)

    # -- request/reply ----------------------------------------------------------

    def _request(self, msg: wire.Message) -> wire.Message:
        self._ensure_usable()
        with self._lock:
            self._waiting = True
        try:
            try:
                self._sock.sendall(wire.encode_message(msg))
            except OSError as exc:
                raise ConnectionLost(f"send failed: {exc}") from exc
            try:
                reply = self._replies.get(timeout=self._config.request_timeout)
            except queue.Empty:
                raise ConnectionLost(
                    f"no reply within request_timeout={self._config.request_timeout}s"
                ) from None
        finally:
            with self._lock:
                self._waiting = False
                while not self._replies.empty():  # drop stale residue
                    self._replies.get_nowait()
        if isinstance(reply, _Lost):
            raise ConnectionLost(reply.reason)
        if isinstance(reply, wire.ErrorMsg):
            raise error_from_code(reply.code, reply.message)
        return reply

    def _ensure_usable(self) -> None:
        if self._closed:
            raise EnvClosed("remote adapter is closed")
        with self._lock:
            if self._broken is not None:
                raise ConnectionLost(self._broken)

    # -- adapter operations ------------------------------------------------------

    def reset(self, seed: Optional[int] = None):
        reply = self._request(wire.Reset(seed=seed))
        if not isinstance(reply, wire.ResetResult):
            raise ProtocolError(f"expected ResetResult, got {type(reply).__name__}")
        return reply.observation, reply.info

    def step(self, actions: dict[AgentId, Value]) -> StepResult:
        reply = self._request(wire.Step(actions=actions))
        if not isinstance(reply, wire.StepResultMsg):
            raise ProtocolError(f"expected StepResultMsg, got {type(reply).__name__}")
        return StepResult(
            observation=reply.observation,
            reward=reply.reward,
            done=reply.done,
            last_action=reply.last_action,
            info=reply.info,
        )

    def query_spaces(self) -> wire.SpaceReply:
        reply = self._request(wire.SpaceQuery())
        if not isinstance(reply, wire.SpaceReply):
            raise ProtocolError(f"expected SpaceReply, got {type(reply).__name__}")
        return reply

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._sock.sendall(wire.encode_message(wire.CloseMsg()))
        except OSError:
            pass
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
        if self._reader.is_alive():
            self._reader.join(timeout=2)
        self._user_end.close()

    # -- introspection -----------------------------------------------------------

    @property
    def observation_space(self) -> dict[AgentId, Space]:
        return self._obs_space

    @property
    def action_space(self) -> dict[AgentId, Space]:
        return self._act_space

    @property
    def controllable_agents(self) -> tuple[AgentId, ...]:
        return self._owned

    @property
    def barrier_timeout(self) -> float:
        return self._barrier_timeout

    # -- side channel ---------------------------------------------------------------

    def _send_side_channel(self, key: str, value: Value) -> None:
        if self._closed:
            raise ChannelClosed("remote adapter is closed")
        check_payload(key, value)
        self._ensure_usable()
        try:
            self._sock.sendall(wire.encode_message(wire.SideChannelMsg(key=key, value=value)))
        except OSError as exc:
            raise ConnectionLost(f"side-channel send failed: {exc}") from exc


def connect(
    config: RemoteConfig | None = None,
    *,
    address: str | None = None,
    port: int | None = None,
    claimed_agents: tuple[AgentId, ...] = (),
    connect_timeout: float | None = None,
    request_timeout: float | None = None,
) -> RemoteAdapter:
    """Connect to a server and return a ready adapter.

    Either pass a :class:`RemoteConfig` or individual fields; claimed_agents
    of () claims every agent the server advertises.
    """
    if config is None:
        kwargs = {}
        if address is not None:
            kwargs["address"] = address
        if port is not None:
            kwargs["port"] = port
        if claimed_agents:
            kwargs["claimed_agents"] = tuple(claimed_agents)
        if connect_timeout is not None:
            kwargs["connect_timeout"] = connect_timeout
        if request_timeout is not None:
            kwargs["request_timeout"] = request_timeout
        config = RemoteConfig(**kwargs)
    return RemoteAdapter(config)
