"""TCP server hosting one environment for N clients behind a step barrier.

Each connected client owns a disjoint subset of agents.  A round collects
actions until every agent is covered, steps the environment exactly once, and
broadcasts one identical result frame to every client.  Reset is barrier
synchronized the same way (first requester's seed wins).  All session-state
mutation and every adapter call happen on a single session thread; reader
threads only parse frames and enqueue events, so a client blocked on the
barrier never blocks another client's submission.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from . import wire
from .channel import check_payload
from .errors import (
    BindFailure,
    EnvlinkError,
    ProtocolError,
    error_code_for,
    ERROR_CODES,
    AgentTaken,
    BarrierTimeout,
    ClientLost,
    NotOwner,
    NotReset,
    RoundAborted,
    SpaceMismatch,
    UnknownAgent,
    VersionMismatch,
)
from .model import Environment
from .spaces import contains

logger = logging.getLogger("envlink.server")

DEFAULT_BARRIER_TIMEOUT = 30.0


def _err(exc_type: type[EnvlinkError], message: str) -> bytes:
    return wire.encode_message(wire.ErrorMsg(code=ERROR_CODES[exc_type], message=message))


@dataclass
class _Conn:
    sock: socket.socket
    addr: tuple
    agents: tuple[str, ...] = ()
    hello_done: bool = False
    alive: bool = True

    def send(self, frame: bytes) -> bool:
        if not self.alive:
            return False
        try:
            self.sock.sendall(frame)
            return True
        except OSError:
            self.alive = False
            try:
                self.sock.close()
            except OSError:
                pass
            return False


@dataclass
class _Session:
    """Barrier bookkeeping for the one hosted environment."""

    pending: dict[str, object] = field(default_factory=dict)
    state: str = "idle"  # idle | collecting | resetting
    reset_requesters: set[int] = field(default_factory=set)
    reset_seed: Optional[int] = None
    deadline: Optional[float] = None
    has_reset: bool = False
    round_index: int = 0


class Server:
    """Serves one :class:`Environment` on a TCP listen socket."""

    def __init__(
        self,
        env: Environment,
        bind: str = "127.0.0.1",
        port: int = wire.DEFAULT_PORT,
        barrier_timeout: float = DEFAULT_BARRIER_TIMEOUT,
    ):
        self._env = env
        self._barrier_timeout = barrier_timeout
        self._agents = set(env.agents)
        self._events: queue.Queue = queue.Queue()
        self._conns: list[_Conn] = []
        self._session = _Session()
        self._stopping = False
        self._channel = env.side_channel
        self._channel.set_default_handler(self._on_env_emission)

        try:
            self._listener = socket.create_server((bind, port))
        except OSError as exc:
            raise BindFailure(f"cannot bind {bind}:{port}: {exc}") from exc
        self._listener.settimeout(0.1)

        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="envlink-accept", daemon=True
        )
        self._session_thread = threading.Thread(
            target=self._session_loop, name="envlink-session", daemon=True
        )
        self._accept_thread.start()
        self._session_thread.start()

    # -- lifecycle ---------------------------------------------------------

    @property
    def port(self) -> int:
        return self._listener.getsockname()[1]

    @property
    def bind_address(self) -> str:
        return self._listener.getsockname()[0]

    def stop(self) -> None:
        if self._stopping:
            return
        self._stopping = True
        try:
            self._listener.close()
        except OSError:
            pass
        self._events.put(("stop", None, None))
        self._session_thread.join(timeout=5)
        self._accept_thread.join(timeout=5)

    def __enter__(self) -> "Server":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- socket threads ------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stopping:
            try:
                sock, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = _Conn(sock=sock, addr=addr)
            threading.Thread(
                target=self._reader_loop,
                args=(conn,),
                name=f"envlink-reader-{addr}",
                daemon=True,
            ).start()

    def _reader_loop(self, conn: _Conn) -> None:
        self._events.put(("join", conn, None))
        decoder = wire.StreamDecoder()
        try:
            while True:
                data = conn.sock.recv(65536)
                if not data:
                    break
                for msg in decoder.feed(data):
                    self._events.put(("msg", conn, msg))
        except (OSError, wire.Malformed, wire.Oversize, wire.UnknownType):
            pass
        finally:
            self._events.put(("gone", conn, None))

    # -- session thread -------------------------------------------------------

    def _session_loop(self) -> None:
        while True:
            timeout = None
            if self._session.deadline is not None:
                timeout = max(self._session.deadline - time.monotonic(), 0.0)
            try:
                kind, conn, payload = self._events.get(timeout=timeout)
            except queue.Empty:
                self._on_barrier_timeout()
                continue
            if kind == "stop":
                self._shutdown_conns()
                return
            if kind == "join":
                self._conns.append(conn)
            elif kind == "gone":
                self._on_disconnect(conn)
            elif kind == "msg":
                try:
                    self._dispatch(conn, payload)
                except Exception:
                    logger.exception("internal error handling %r", payload)
                    conn.send(_err(ProtocolError, "internal server error"))

    def _dispatch(self, conn: _Conn, msg: wire.Message) -> None:
        if isinstance(msg, wire.Hello):
            self._on_hello(conn, msg)
            return
        if not conn.hello_done:
            conn.send(_err(ProtocolError, "handshake required before other messages"))
            self._drop_conn(conn)
            return
        if isinstance(msg, wire.Step):
            self._on_step(conn, msg)
        elif isinstance(msg, wire.Reset):
            self._on_reset(conn, msg)
        elif isinstance(msg, wire.SideChannelMsg):
            self._on_side_channel(conn, msg)
        elif isinstance(msg, wire.SpaceQuery):
            conn.send(
                wire.encode_message(
                    wire.SpaceReply(
                        observation_space=self._env.observation_space,
                        action_space=self._env.action_space,
                    )
                )
            )
        elif isinstance(msg, wire.CloseMsg):
            self._drop_conn(conn)
        else:
            conn.send(_err(ProtocolError, f"unexpected message {type(msg).__name__}"))

    # -- handshake ------------------------------------------------------------

    def _on_hello(self, conn: _Conn, msg: wire.Hello) -> None:
        if conn.hello_done:
            conn.send(_err(ProtocolError, "duplicate Hello"))
            self._drop_conn(conn)
            return
        if msg.version != wire.PROTOCOL_VERSION:
            conn.send(
                _err(
                    VersionMismatch,
                    f"server speaks protocol {wire.PROTOCOL_VERSION}, client sent {msg.version}",
                )
            )
            self._drop_conn(conn)
            return
        claimed = set(msg.agents) if msg.agents else set(self._agents)
        unknown = claimed - self._agents
        if unknown:
            conn.send(_err(UnknownAgent, f"unknown agents: {sorted(unknown)}"))
            self._drop_conn(conn)
            return
        owned = {a for c in self._conns if c.hello_done and c.alive for a in c.agents}
        taken = claimed & owned
        if taken:
            conn.send(_err(AgentTaken, f"agents already owned: {sorted(taken)}"))
            self._drop_conn(conn)
            return
        conn.agents = tuple(sorted(claimed))
        conn.hello_done = True
        conn.send(
            wire.encode_message(
                wire.HelloAck(
                    agents=conn.agents,
                    observation_space=self._env.observation_space,
                    action_space=self._env.action_space,
                    barrier_timeout_ms=int(self._barrier_timeout * 1000),
                )
            )
        )
        logger.info("client %s joined owning %s", conn.addr, list(conn.agents))

    # -- step barrier ------------------------------------------------------------

    def _on_step(self, conn: _Conn, msg: wire.Step) -> None:
        s = self._session
        if not s.has_reset:
            conn.send(_err(NotReset, "environment has not been reset"))
            return
        if s.state == "resetting":
            conn.send(_err(ProtocolError, "step submitted during a reset barrier"))
            return
        if not msg.actions:
            conn.send(_err(ProtocolError, "empty action map"))
            return
        not_owned = set(msg.actions) - set(conn.agents)
        if not_owned:
            conn.send(_err(NotOwner, f"connection does not own: {sorted(not_owned)}"))
            return
        action_space = self._env.action_space
        for agent, action in msg.actions.items():
            if not contains(action_space[agent], action):
                conn.send(_err(SpaceMismatch, f"action for {agent!r} violates its space"))
                return
        # Algorithm rule: re-submission within a round overwrites.
        s.pending.update(msg.actions)
        if s.state == "idle":
            s.state = "collecting"
            s.deadline = time.monotonic() + self._barrier_timeout
        if set(s.pending) == self._agents:
            self._complete_step_round()

    def _complete_step_round(self) -> None:
        s = self._session
        actions = dict(s.pending)
        s.pending.clear()
        s.state = "idle"
        s.deadline = None
        try:
            result = self._env.step(actions)
        except EnvlinkError as exc:
            self._broadcast(
                wire.encode_message(
                    wire.ErrorMsg(code=error_code_for(exc), message=str(exc))
                )
            )
            return
        frame = wire.encode_message(
            wire.StepResultMsg(
                observation=result.observation,
                reward=result.reward,
                done=result.done,
                last_action=result.last_action,
                info=result.info,
            )
        )
        self._broadcast(frame)
        logger.info(
            "round %d stepped %d agents (%d clients)",
            s.round_index,
            len(actions),
            sum(1 for c in self._conns if c.hello_done and c.alive),
        )
        s.round_index += 1

    # -- reset barrier --------------------------------------------------------------

    def _on_reset(self, conn: _Conn, msg: wire.Reset) -> None:
        s = self._session
        if s.state == "collecting":
            self._broadcast(_err(RoundAborted, "reset requested during a step round"))
            s.pending.clear()
            s.state = "idle"
            s.deadline = None
        if s.state == "idle":
            s.state = "resetting"
            s.reset_requesters = set()
            s.reset_seed = msg.seed
            s.deadline = time.monotonic() + self._barrier_timeout
        elif s.reset_seed != msg.seed:
            logger.info(
                "reset seed %r ignored; first requester chose %r", msg.seed, s.reset_seed
            )
        s.reset_requesters.add(id(conn))
        self._maybe_complete_reset()

    def _maybe_complete_reset(self) -> None:
        s = self._session
        if s.state != "resetting":
            return
        live = [c for c in self._conns if c.hello_done and c.alive]
        if not live or any(id(c) not in s.reset_requesters for c in live):
            return
        s.state = "idle"
        s.deadline = None
        s.reset_requesters = set()
        try:
            observation, info = self._env.reset(s.reset_seed)
        except EnvlinkError as exc:
            self._broadcast(
                wire.encode_message(
                    wire.ErrorMsg(code=error_code_for(exc), message=str(exc))
                )
            )
            return
        s.has_reset = True
        self._broadcast(
            wire.encode_message(wire.ResetResult(observation=observation, info=info))
        )
        logger.info("environment reset (seed=%r)", s.reset_seed)

    # -- side channel ------------------------------------------------------------------

    def _on_side_channel(self, conn: _Conn, msg: wire.SideChannelMsg) -> None:
        try:
            check_payload(msg.key, msg.value)
        except EnvlinkError as exc:
            conn.send(_err(ProtocolError, str(exc)))
            return
        self._channel.send(msg.key, msg.value)

    def _on_env_emission(self, message) -> None:
        # Runs on the session thread (env code only executes there), so the
        # broadcast order matches emission order.
        self._broadcast(
            wire.encode_message(wire.SideChannelMsg(key=message.key, value=message.value))
        )

    # -- failure handling ------------------------------------------------------------

    def _on_barrier_timeout(self) -> None:
        s = self._session
        if s.deadline is None or time.monotonic() < s.deadline:
            return
        aborted = s.state
        s.pending.clear()
        s.reset_requesters = set()
        s.state = "idle"
        s.deadline = None
        self._broadcast(
            _err(BarrierTimeout, f"{aborted} round timed out after {self._barrier_timeout}s")
        )
        logger.warning("%s round timed out", aborted)

    def _on_disconnect(self, conn: _Conn) -> None:
        if conn in self._conns:
            self._conns.remove(conn)
        conn.alive = False
        try:
            conn.sock.close()
        except OSError:
            pass
        if not conn.hello_done:
            return
        logger.info("client %s left; agents %s orphaned", conn.addr, list(conn.agents))
        s = self._session
        if s.state == "collecting":
            s.pending.clear()
            s.state = "idle"
            s.deadline = None
            self._broadcast(_err(ClientLost, f"client owning {list(conn.agents)} disconnected"))
        elif s.state == "resetting":
            s.reset_requesters.discard(id(conn))
            if any(c.hello_done and c.alive for c in self._conns):
                self._maybe_complete_reset()
            else:
                s.state = "idle"
                s.deadline = None
        if not any(c.hello_done and c.alive for c in self._conns):
            s.pending.clear()
            s.state = "idle"
            s.deadline = None

    def _drop_conn(self, conn: _Conn) -> None:
        conn.alive = False
        try:
            conn.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            conn.sock.close()
        except OSError:
            pass

    def _broadcast(self, frame: bytes) -> None:
        for c in list(self._conns):
            if c.hello_done and c.alive:
                c.send(frame)

    def _shutdown_conns(self) -> None:
        for c in list(self._conns):
            self._drop_conn(c)
        self._conns.clear()


def serve(
    env: Environment,
    bind: str = "127.0.0.1",
    port: int = wire.DEFAULT_PORT,
    barrier_timeout: float = DEFAULT_BARRIER_TIMEOUT,
) -> Server:
    """Start serving *env*; returns the running server handle."""
    return Server(env, bind=bind, port=port, barrier_timeout=barrier_timeout)
