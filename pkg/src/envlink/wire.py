"""Protocol v1: canonical binary encoding of values, spaces, and messages,
with length-prefixed framing.

Frame layout: 4-byte big-endian body length + body; body = 1 type byte +
payload fields in declared order.  All integers inside payloads are
little-endian.  Value encodings are canonical (map entries sorted by UTF-8
key bytes), so one value has exactly one byte representation and whole step
results can be compared frame-for-frame.

Value encoding, after a 1-byte tag:
    0x00 Bool    1 byte 0/1
    0x01 Int     8-byte LE two's complement
    0x02 Float   8-byte LE binary64
    0x03 Str     u32-le length + UTF-8 bytes
    0x04 Bytes   u32-le length + raw
    0x05 Tensor  dtype byte {0 f32, 1 f64, 2 i32, 3 i64, 4 u8} + rank byte
                 + rank x u32-le dims + row-major LE data
    0x06 List    u32-le count + elements
    0x07 Map     u32-le count + (key: u32-le length + UTF-8, tagged value)
                 pairs in ascending byte-wise key order

Space encoding: kind byte 0x00 Discrete + u32-le n, or 0x01 Box + tagged
tensor low + tagged tensor high.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, Malformed, Oversize, TrailingBytes, UnknownType
from .spaces import Box, Discrete, Space
from .values import DTYPES, DTYPE_WIDTH, INT64_MAX, INT64_MIN, Tensor, Value

MAX_FRAME = 64 * 1024 * 1024
PROTOCOL_VERSION = 1
DEFAULT_PORT = 8888


def default_port() -> int:
    """Default TCP port, overridable via the ENVLINK_PORT environment variable."""
    raw = os.environ.get("ENVLINK_PORT")
    if raw is None:
        return DEFAULT_PORT
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"ENVLINK_PORT must be an integer, got {raw!r}") from None

TAG_BOOL, TAG_INT, TAG_FLOAT, TAG_STR, TAG_BYTES, TAG_TENSOR, TAG_LIST, TAG_MAP = range(8)

_DTYPE_CODE = {"f32": 0, "f64": 1, "i32": 2, "i64": 3, "u8": 4}
_CODE_DTYPE = {v: k for k, v in _DTYPE_CODE.items()}

_MAX_DEPTH = 64


# --- message types -----------------------------------------------------------

MSG_HELLO = 0x01
MSG_HELLO_ACK = 0x02
MSG_RESET = 0x03
MSG_RESET_RESULT = 0x04
MSG_STEP = 0x05
MSG_STEP_RESULT = 0x06
MSG_CLOSE = 0x07
MSG_SIDE_CHANNEL = 0x08
MSG_SPACE_QUERY = 0x09
MSG_SPACE_REPLY = 0x0A
MSG_ERROR = 0x0E


@dataclass(frozen=True)
class Hello:
    version: int = PROTOCOL_VERSION
    agents: tuple[str, ...] = ()


@dataclass(frozen=True)
class HelloAck:
    agents: tuple[str, ...]
    observation_space: dict[str, Space]
    action_space: dict[str, Space]
    barrier_timeout_ms: int


@dataclass(frozen=True)
class Reset:
    seed: int | None = None


@dataclass(frozen=True)
class ResetResult:
    observation: dict[str, Value]
    info: dict[str, Value]


@dataclass(frozen=True)
class Step:
    actions: dict[str, Value]


@dataclass(frozen=True)
class StepResultMsg:
    observation: dict[str, Value]
    reward: dict[str, float]
    done: dict[str, bool]
    last_action: dict[str, Value]
    info: dict[str, Value]


@dataclass(frozen=True)
class CloseMsg:
    pass


@dataclass(frozen=True)
class SideChannelMsg:
    key: str
    value: Value


@dataclass(frozen=True)
class SpaceQuery:
    pass


@dataclass(frozen=True)
class SpaceReply:
    observation_space: dict[str, Space]
    action_space: dict[str, Space]


@dataclass(frozen=True)
class ErrorMsg:
    code: int
    message: str


Message = (
    Hello
    | HelloAck
    | Reset
    | ResetResult
    | Step
    | StepResultMsg
    | CloseMsg
    | SideChannelMsg
    | SpaceQuery
    | SpaceReply
    | ErrorMsg
)


# --- primitive writers --------------------------------------------------------

def _w_u16(out: bytearray, v: int) -> None:
    out += struct.pack("<H", v)


def _w_u32(out: bytearray, v: int) -> None:
    out += struct.pack("<I", v)


def _w_u64(out: bytearray, v: int) -> None:
    out += struct.pack("<Q", v)


def _w_str(out: bytearray, s: str) -> None:
    raw = s.encode("utf-8")
    _w_u32(out, len(raw))
    out += raw


def _w_value(out: bytearray, v: Value, depth: int = 0) -> None:
    if depth > _MAX_DEPTH:
        raise Malformed("value nesting exceeds depth 64")
    if isinstance(v, bool):
        out.append(TAG_BOOL)
        out.append(1 if v else 0)
    elif isinstance(v, int):
        if not (INT64_MIN <= v <= INT64_MAX):
            raise Malformed(f"int {v} outside 64-bit signed range")
        out.append(TAG_INT)
        out += struct.pack("<q", v)
    elif isinstance(v, float):
        out.append(TAG_FLOAT)
        out += struct.pack("<d", v)
    elif isinstance(v, str):
        out.append(TAG_STR)
        _w_str(out, v)
    elif isinstance(v, bytes):
        out.append(TAG_BYTES)
        _w_u32(out, len(v))
        out += v
    elif isinstance(v, Tensor):
        out.append(TAG_TENSOR)
        out.append(_DTYPE_CODE[v.dtype])
        shape = v.shape
        if len(shape) > 255:
            raise Malformed("tensor rank exceeds 255")
        out.append(len(shape))
        for dim in shape:
            _w_u32(out, dim)
        out += v.tobytes()
    elif isinstance(v, list):
        out.append(TAG_LIST)
        _w_u32(out, len(v))
        for item in v:
            _w_value(out, item, depth + 1)
    elif isinstance(v, dict):
        out.append(TAG_MAP)
        _w_map_body(out, v, depth)
    else:
        raise Malformed(f"unsupported value type {type(v).__name__}")


def _w_map_body(out: bytearray, m: dict[str, Value], depth: int = 0) -> None:
    entries = []
    for k, item in m.items():
        if not isinstance(k, str):
            raise Malformed(f"map key {k!r} is not a string")
        entries.append((k.encode("utf-8"), item))
    entries.sort(key=lambda e: e[0])
    _w_u32(out, len(entries))
    for raw, item in entries:
        _w_u32(out, len(raw))
        out += raw
        _w_value(out, item, depth + 1)


def _w_value_map(out: bytearray, m: dict[str, Value]) -> None:
    _w_map_body(out, m)


def _w_space(out: bytearray, s: Space) -> None:
    if isinstance(s, Discrete):
        out.append(0x00)
        _w_u32(out, s.n)
    elif isinstance(s, Box):
        out.append(0x01)
        _w_value(out, s.low)
        _w_value(out, s.high)
    else:
        raise Malformed(f"not a space: {s!r}")


def _w_space_map(out: bytearray, m: dict[str, Space]) -> None:
    entries = sorted(((k.encode("utf-8"), s) for k, s in m.items()), key=lambda e: e[0])
    _w_u32(out, len(entries))
    for raw, s in entries:
        _w_u32(out, len(raw))
        out += raw
        _w_space(out, s)


def _w_str_list(out: bytearray, items: tuple[str, ...] | list[str]) -> None:
    _w_u32(out, len(items))
    for s in items:
        _w_str(out, s)


# --- reader -------------------------------------------------------------------

class _Reader:
    __slots__ = ("buf", "pos")

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise Malformed("truncated input")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def byte(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise Malformed(f"invalid UTF-8 string: {exc}") from None

    @property
    def remaining(self) -> int:
        return len(self.buf) - self.pos

    def expect_exhausted(self) -> None:
        if self.remaining:
            raise TrailingBytes(f"{self.remaining} undecoded bytes remain")


def _r_value(r: _Reader, depth: int = 0) -> Value:
    if depth > _MAX_DEPTH:
        raise Malformed("value nesting exceeds depth 64")
    tag = r.byte()
    if tag == TAG_BOOL:
        b = r.byte()
        if b not in (0, 1):
            raise Malformed(f"bool byte must be 0 or 1, got {b}")
        return b == 1
    if tag == TAG_INT:
        return r.i64()
    if tag == TAG_FLOAT:
        return r.f64()
    if tag == TAG_STR:
        return r.string()
    if tag == TAG_BYTES:
        return r.take(r.u32())
    if tag == TAG_TENSOR:
        code = r.byte()
        if code not in _CODE_DTYPE:
            raise Malformed(f"unknown tensor dtype code {code}")
        dtype = _CODE_DTYPE[code]
        rank = r.byte()
        shape = tuple(r.u32() for _ in range(rank))
        count = 1
        for dim in shape:
            count *= dim
            if count * DTYPE_WIDTH[dtype] > MAX_FRAME:
                raise Malformed("tensor dimensions overflow the frame limit")
        raw = r.take(count * DTYPE_WIDTH[dtype])
        arr = np.frombuffer(raw, dtype=DTYPES[dtype]).reshape(shape)
        return Tensor(arr, dtype=dtype)
    if tag == TAG_LIST:
        count = r.u32()
        if count > r.remaining:
            raise Malformed("list count exceeds remaining bytes")
        return [_r_value(r, depth + 1) for _ in range(count)]
    if tag == TAG_MAP:
        return _r_map_body(r, depth)
    raise Malformed(f"unknown value tag {tag:#04x}")


def _r_map_body(r: _Reader, depth: int = 0) -> dict[str, Value]:
    count = r.u32()
    if count > r.remaining:
        raise Malformed("map count exceeds remaining bytes")
    out: dict[str, Value] = {}
    prev: bytes | None = None
    for _ in range(count):
        raw = r.take(r.u32())
        if prev is not None and raw <= prev:
            raise Malformed("map keys not in strictly ascending byte order")
        prev = raw
        try:
            key = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise Malformed(f"invalid UTF-8 map key: {exc}") from None
        out[key] = _r_value(r, depth + 1)
    return out


def _r_value_map(r: _Reader) -> dict[str, Value]:
    return _r_map_body(r)


def _r_space(r: _Reader) -> Space:
    kind = r.byte()
    if kind == 0x00:
        n = r.u32()
        if n < 1:
            raise Malformed("Discrete.n must be >= 1")
        return Discrete(n)
    if kind == 0x01:
        low = _r_value(r)
        high = _r_value(r)
        if not isinstance(low, Tensor) or not isinstance(high, Tensor):
            raise Malformed("Box bounds must be tensors")
        try:
            return Box(low, high)
        except ValueError as exc:
            raise Malformed(f"invalid Box: {exc}") from None
    raise Malformed(f"unknown space kind {kind:#04x}")


def _r_space_map(r: _Reader) -> dict[str, Space]:
    count = r.u32()
    if count > r.remaining:
        raise Malformed("space map count exceeds remaining bytes")
    out: dict[str, Space] = {}
    for _ in range(count):
        raw = r.take(r.u32())
        out[raw.decode("utf-8")] = _r_space(r)
    return out


def _r_str_list(r: _Reader) -> tuple[str, ...]:
    count = r.u32()
    if count > r.remaining:
        raise Malformed("string list count exceeds remaining bytes")
    return tuple(r.string() for _ in range(count))


# --- public value API -----------------------------------------------------------

def encode_value(v: Value) -> bytes:
    """Canonical bytes for one value tree."""
    out = bytearray()
    _w_value(out, v)
    return bytes(out)


def decode_value(b: bytes) -> Value:
    """Inverse of :func:`encode_value`; rejects trailing bytes."""
    r = _Reader(b)
    v = _r_value(r)
    r.expect_exhausted()
    return v


# --- message codec ----------------------------------------------------------------

def _typed_float_map(m: dict[str, Value]) -> dict[str, float]:
    for k, v in m.items():
        if not isinstance(v, float):
            raise Malformed(f"reward for {k!r} is not a Float")
    return m  # type: ignore[return-value]


def _typed_bool_map(m: dict[str, Value]) -> dict[str, bool]:
    for k, v in m.items():
        if not isinstance(v, bool):
            raise Malformed(f"done flag for {k!r} is not a Bool")
    return m  # type: ignore[return-value]


def encode_message(m: Message) -> bytes:
    """Encode a message into one self-delimiting frame."""
    body = bytearray()
    if isinstance(m, Hello):
        body.append(MSG_HELLO)
        _w_u16(body, m.version)
        _w_str_list(body, m.agents)
    elif isinstance(m, HelloAck):
        body.append(MSG_HELLO_ACK)
        _w_str_list(body, m.agents)
        _w_space_map(body, m.observation_space)
        _w_space_map(body, m.action_space)
        _w_u32(body, m.barrier_timeout_ms)
    elif isinstance(m, Reset):
        body.append(MSG_RESET)
        if m.seed is None:
            body.append(0)
        else:
            body.append(1)
            _w_u64(body, m.seed)
    elif isinstance(m, ResetResult):
        body.append(MSG_RESET_RESULT)
        _w_value_map(body, m.observation)
        _w_value_map(body, m.info)
    elif isinstance(m, Step):
        body.append(MSG_STEP)
        _w_value_map(body, m.actions)
    elif isinstance(m, StepResultMsg):
        body.append(MSG_STEP_RESULT)
        _w_value_map(body, m.observation)
        _w_value_map(body, {k: float(v) for k, v in m.reward.items()})
        _w_value_map(body, {k: bool(v) for k, v in m.done.items()})
        _w_value_map(body, m.last_action)
        _w_value_map(body, m.info)
    elif isinstance(m, CloseMsg):
        body.append(MSG_CLOSE)
    elif isinstance(m, SideChannelMsg):
        body.append(MSG_SIDE_CHANNEL)
        _w_str(body, m.key)
        _w_value(body, m.value)
    elif isinstance(m, SpaceQuery):
        body.append(MSG_SPACE_QUERY)
    elif isinstance(m, SpaceReply):
        body.append(MSG_SPACE_REPLY)
        _w_space_map(body, m.observation_space)
        _w_space_map(body, m.action_space)
    elif isinstance(m, ErrorMsg):
        body.append(MSG_ERROR)
        _w_u16(body, m.code)
        _w_str(body, m.message)
    else:
        raise Malformed(f"not a protocol message: {m!r}")
    if len(body) > MAX_FRAME:
        raise Oversize(f"frame body of {len(body)} bytes exceeds {MAX_FRAME}")
    return struct.pack(">I", len(body)) + bytes(body)


def _decode_body(body: bytes) -> Message:
    r = _Reader(body)
    mtype = r.byte()
    if mtype == MSG_HELLO:
        msg: Message = Hello(version=r.u16(), agents=_r_str_list(r))
    elif mtype == MSG_HELLO_ACK:
        msg = HelloAck(
            agents=_r_str_list(r),
            observation_space=_r_space_map(r),
            action_space=_r_space_map(r),
            barrier_timeout_ms=r.u32(),
        )
    elif mtype == MSG_RESET:
        flag = r.byte()
        if flag not in (0, 1):
            raise Malformed("reset seed flag must be 0 or 1")
        msg = Reset(seed=r.u64() if flag else None)
    elif mtype == MSG_RESET_RESULT:
        msg = ResetResult(observation=_r_value_map(r), info=_r_value_map(r))
    elif mtype == MSG_STEP:
        msg = Step(actions=_r_value_map(r))
    elif mtype == MSG_STEP_RESULT:
        msg = StepResultMsg(
            observation=_r_value_map(r),
            reward=_typed_float_map(_r_value_map(r)),
            done=_typed_bool_map(_r_value_map(r)),
            last_action=_r_value_map(r),
            info=_r_value_map(r),
        )
    elif mtype == MSG_CLOSE:
        msg = CloseMsg()
    elif mtype == MSG_SIDE_CHANNEL:
        msg = SideChannelMsg(key=r.string(), value=_r_value(r))
    elif mtype == MSG_SPACE_QUERY:
        msg = SpaceQuery()
    elif mtype == MSG_SPACE_REPLY:
        msg = SpaceReply(observation_space=_r_space_map(r), action_space=_r_space_map(r))
    elif mtype == MSG_ERROR:
        msg = ErrorMsg(code=r.u16(), message=r.string())
    else:
        raise UnknownType(f"unknown message type {mtype:#04x}")
    r.expect_exhausted()
    return msg


def decode_message(frame: bytes) -> Message:
    """Decode exactly one whole frame (length prefix included)."""
    if len(frame) < 4:
        raise Malformed("frame shorter than its length prefix")
    (length,) = struct.unpack(">I", frame[:4])
    if length > MAX_FRAME:
        raise Oversize(f"declared frame length {length} exceeds {MAX_FRAME}")
    if len(frame) - 4 < length:
        raise Malformed("frame body truncated")
    if len(frame) - 4 > length:
        raise TrailingBytes("bytes beyond the declared frame length")
    if length == 0:
        raise Malformed("empty frame body")
    return _decode_body(frame[4 : 4 + length])


@dataclass
class StreamDecoder:
    """Incremental frame splitter; chunk boundaries never affect output."""

    _buf: bytearray = field(default_factory=bytearray)

    def feed(self, data: bytes) -> list[Message]:
        self._buf += data
        out: list[Message] = []
        while True:
            if len(self._buf) < 4:
                break
            (length,) = struct.unpack(">I", bytes(self._buf[:4]))
            if length > MAX_FRAME:
                raise Oversize(f"declared frame length {length} exceeds {MAX_FRAME}")
            if len(self._buf) < 4 + length:
                break
            body = bytes(self._buf[4 : 4 + length])
            del self._buf[: 4 + length]
            if length == 0:
                raise Malformed("empty frame body")
            out.append(_decode_body(body))
        return out

    def eof(self) -> None:
        """Signal end of stream; a partial buffered frame is an error."""
        if self._buf:
            raise Malformed(f"stream ended mid-frame with {len(self._buf)} bytes buffered")
