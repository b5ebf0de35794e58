"""Tagged value model carried by observations, actions, info maps, and the wire.

A ``Value`` is one of: ``bool``, ``int`` (64-bit signed), ``float`` (binary64),
``str``, ``bytes``, :class:`Tensor`, ``list[Value]``, or ``dict[str, Value]``.
Plain Python types are used directly; :class:`Tensor` wraps a numpy array with
one of five pinned dtypes.  ``bool`` is checked before ``int`` everywhere since
it subclasses int.
"""

from __future__ import annotations

from typing import Union

import numpy as np

# Little-endian layouts are part of the wire format; never use native-order
# dtypes here.
DTYPES: dict[str, np.dtype] = {
    "f32": np.dtype("<f4"),
    "f64": np.dtype("<f8"),
    "i32": np.dtype("<i4"),
    "i64": np.dtype("<i8"),
    "u8": np.dtype("<u1"),
}

DTYPE_WIDTH = {"f32": 4, "f64": 8, "i32": 4, "i64": 8, "u8": 1}

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1


class Tensor:
    """Dense row-major tensor with a pinned dtype.

    Equality is bitwise: two tensors are equal iff dtype, shape, and raw
    little-endian bytes all match.
    """

    __slots__ = ("_array", "_dtype")

    def __init__(self, data, dtype: str = "f64", shape: tuple[int, ...] | None = None):
        if dtype not in DTYPES:
            raise ValueError(f"unknown tensor dtype {dtype!r}")
        # np.array(copy=True, order="C") rather than ascontiguousarray: the
        # latter silently promotes rank-0 arrays to rank 1.
        arr = np.array(data, dtype=DTYPES[dtype], order="C", copy=True)
        if shape is not None:
            arr = arr.reshape(tuple(shape))
        self._array = arr
        self._array.flags.writeable = False
        self._dtype = dtype

    @property
    def dtype(self) -> str:
        return self._dtype

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self._array.shape)

    @property
    def array(self) -> np.ndarray:
        """Read-only numpy view of the data."""
        return self._array

    def tolist(self) -> list:
        return self._array.tolist()

    def item(self):
        return self._array.item()

    def tobytes(self) -> bytes:
        return self._array.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return (
            self._dtype == other._dtype
            and self.shape == other.shape
            and self.tobytes() == other.tobytes()
        )

    def __hash__(self):
        return hash((self._dtype, self.shape, self.tobytes()))

    def __repr__(self) -> str:
        return f"Tensor({self._array.tolist()!r}, dtype={self._dtype!r})"


Value = Union[bool, int, float, str, bytes, Tensor, list, dict]

SCALAR_TAGS = (bool, int, float, str, bytes)


def check_value(v: Value, _depth: int = 0) -> None:
    """Validate that *v* is a well-formed Value tree.

    Raises ValueError for unsupported types, out-of-range ints, or non-string
    map keys.
    """
    if _depth > 64:
        raise ValueError("value nesting exceeds depth 64")
    if isinstance(v, bool):
        return
    if isinstance(v, int):
        if not (INT64_MIN <= v <= INT64_MAX):
            raise ValueError(f"int {v} outside 64-bit signed range")
        return
    if isinstance(v, (float, str, bytes, Tensor)):
        return
    if isinstance(v, list):
        for item in v:
            check_value(item, _depth + 1)
        return
    if isinstance(v, dict):
        for k, item in v.items():
            if not isinstance(k, str):
                raise ValueError(f"map key {k!r} is not a string")
            check_value(item, _depth + 1)
        return
    raise ValueError(f"unsupported value type {type(v).__name__}")


def values_equal(a: Value, b: Value) -> bool:
    """Exact (bitwise for tensors/floats) equality of two value trees."""
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    if isinstance(a, float) or isinstance(b, float):
        if not (isinstance(a, float) and isinstance(b, float)):
            return False
        # bitwise so NaN == NaN and -0.0 != 0.0
        return np.float64(a).tobytes() == np.float64(b).tobytes()
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(values_equal(a[k], b[k]) for k in a)
    if type(a) is not type(b):
        return False
    return a == b


# --- portable JSON form ------------------------------------------------------
# Used by the golden-file corpus so any implementation can reconstruct the
# exact Value.  Int and i64 tensor payloads are strings to survive JSON
# parsers without 64-bit integers.

def to_portable(v: Value):
    if isinstance(v, bool):
        return {"t": "bool", "v": v}
    if isinstance(v, int):
        return {"t": "int", "v": str(v)}
    if isinstance(v, float):
        return {"t": "float", "v": v}
    if isinstance(v, str):
        return {"t": "str", "v": v}
    if isinstance(v, bytes):
        return {"t": "bytes", "hex": v.hex()}
    if isinstance(v, Tensor):
        flat = np.ravel(v.array).tolist()
        if v.dtype == "i64":
            flat = [str(x) for x in flat]
        return {"t": "tensor", "dtype": v.dtype, "shape": list(v.shape), "data": flat}
    if isinstance(v, list):
        return {"t": "list", "items": [to_portable(x) for x in v]}
    if isinstance(v, dict):
        return {"t": "map", "entries": [[k, to_portable(x)] for k, x in sorted(v.items())]}
    raise ValueError(f"unsupported value type {type(v).__name__}")


def from_portable(obj) -> Value:
    tag = obj["t"]
    if tag == "bool":
        return bool(obj["v"])
    if tag == "int":
        return int(obj["v"])
    if tag == "float":
        return float(obj["v"])
    if tag == "str":
        return str(obj["v"])
    if tag == "bytes":
        return bytes.fromhex(obj["hex"])
    if tag == "tensor":
        data = obj["data"]
        if obj["dtype"] == "i64":
            data = [int(x) for x in data]
        return Tensor(data, dtype=obj["dtype"], shape=tuple(obj["shape"]))
    if tag == "list":
        return [from_portable(x) for x in obj["items"]]
    if tag == "map":
        return {k: from_portable(x) for k, x in obj["entries"]}
    raise ValueError(f"unknown portable tag {tag!r}")
