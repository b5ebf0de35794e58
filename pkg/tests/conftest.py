"""Shared test helpers: a raw-socket protocol client and instrumented adapters."""

from __future__ import annotations

import socket
import struct
from typing import Optional

import pytest

from envlink import wire
from envlink.model import EnvironmentAdapter, StepResult


def recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed")
        buf.extend(chunk)
    return bytes(buf)


def read_frame(sock: socket.socket) -> tuple[bytes, wire.Message]:
    """One whole frame off the socket: (raw bytes incl. prefix, decoded message)."""
    header = recv_exact(sock, 4)
    (length,) = struct.unpack(">I", header)
    body = recv_exact(sock, length)
    raw = header + body
    return raw, wire.decode_message(raw)


class RawClient:
    """Byte-level protocol client for exercising the server directly."""

    def __init__(
        self,
        port: int,
        agents: tuple[str, ...] = (),
        version: int = wire.PROTOCOL_VERSION,
        host: str = "127.0.0.1",
        handshake: bool = True,
        timeout: float = 10.0,
    ):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.ack: Optional[wire.HelloAck] = None
        if handshake:
            self.send(wire.Hello(version=version, agents=agents))
            _, msg = self.read()
            if isinstance(msg, wire.ErrorMsg):
                self.close()
                raise AssertionError(f"handshake refused: {msg}")
            assert isinstance(msg, wire.HelloAck)
            self.ack = msg

    def send(self, msg: wire.Message) -> None:
        self.sock.sendall(wire.encode_message(msg))

    def read(self) -> tuple[bytes, wire.Message]:
        return read_frame(self.sock)

    def expect_error(self, code: int) -> wire.ErrorMsg:
        _, msg = self.read()
        assert isinstance(msg, wire.ErrorMsg), f"expected ErrorMsg, got {msg}"
        assert msg.code == code, f"expected code {code}, got {msg.code} ({msg.message})"
        return msg

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class CountingAdapter(EnvironmentAdapter):
    """Delegating adapter that records every step/reset call."""

    def __init__(self, inner: EnvironmentAdapter):
        super().__init__()
        self.inner = inner
        self.step_calls = 0
        self.reset_calls = 0
        self.step_actions: list[dict] = []
        self.reset_seeds: list = []

    def reset(self, seed=None):
        self.reset_calls += 1
        self.reset_seeds.append(seed)
        return self.inner.reset(seed)

    def step(self, actions) -> StepResult:
        self.step_calls += 1
        self.step_actions.append(dict(actions))
        return self.inner.step(actions)

    def close(self):
        super().close()
        self.inner.close()

    @property
    def observation_space(self):
        return self.inner.observation_space

    @property
    def action_space(self):
        return self.inner.action_space


@pytest.fixture
def free_port():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return port
