#!/usr/bin/env python3
"""Regenerate the committed golden corpora under golden/.

The corpora pin the wire encoding across implementations: each entry pairs a
portable JSON description with the exact hex bytes the codec must produce.
Run from the repository root:  python tools/make_golden.py
"""

import json
import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from envlink import wire  # noqa: E402
from envlink.spaces import Box, Discrete  # noqa: E402
from envlink.values import Tensor, to_portable  # noqa: E402

ROOT = pathlib.Path(__file__).resolve().parents[1]


VALUE_ENTRIES = [
    ("bool_true", True),
    ("bool_false", False),
    ("int_zero", 0),
    ("int_one", 1),
    ("int_minus_one", -1),
    ("int_max", (1 << 63) - 1),
    ("int_min", -(1 << 63)),
    ("int_2_53_plus_1", (1 << 53) + 1),
    ("float_zero", 0.0),
    ("float_neg_zero", -0.0),
    ("float_one_point_five", 1.5),
    ("float_pi", math.pi),
    ("float_tiny", 5e-324),
    ("float_huge", 1.7976931348623157e308),
    ("float_tenth", 0.1),
    ("str_empty", ""),
    ("str_ascii", "agent0"),
    ("str_unicode", "pêndulo ✓"),
    ("bytes_empty", b""),
    ("bytes_short", b"\x00\x01\xfe\xff"),
    ("tensor_u8", Tensor([0, 128, 255], dtype="u8")),
    ("tensor_i32", Tensor([[1, -2], [3, -4]], dtype="i32")),
    ("tensor_i64", Tensor([-(2**62), 0, 2**62], dtype="i64")),
    ("tensor_f32", Tensor([1.5, -0.25, 0.0], dtype="f32")),
    ("tensor_f64", Tensor([math.pi, -1.0], dtype="f64")),
    ("tensor_rank0", Tensor(2.5, dtype="f64", shape=())),
    ("tensor_empty_dim", Tensor([], dtype="i32", shape=(0,))),
    ("tensor_2x3_i64", Tensor([[1, 2, 3], [4, 5, 6]], dtype="i64")),
    ("list_empty", []),
    ("list_scalars", [True, -7, 2.5, "x", b"\xaa"]),
    ("list_nested_depth4", [1, [2, [3, [4]]]]),
    ("map_empty", {}),
    ("map_ordering", {"b": 1, "a": 2}),
    ("map_unicode_key_after_z", {"é": 1, "z": 2}),
    ("map_prefix_keys", {"a": 1, "aa": 2, "ab": 3}),
    ("map_nested", {"outer": {"inner": [1.0, 2.0]}}),
    (
        "observation_map",
        {"agent0": Tensor([0, 0], dtype="i64"), "agent1": Tensor([1, 0], dtype="i64")},
    ),
    (
        "step_like_map",
        {
            "done": {"agent0": False},
            "obs": {"agent0": Tensor([0.5, -0.5, 1.0], dtype="f64")},
            "reward": {"agent0": -1.0},
        },
    ),
    ("mixed_depth", {"k": [{"a": [1, 2]}, "s", {"b": b"\x00"}]}),
    ("float_list", [0.5, -0.5, 1e-10, -1e10]),
]


def space_to_portable(space):
    if isinstance(space, Discrete):
        return {"kind": "discrete", "n": space.n}
    return {
        "kind": "box",
        "dtype": space.dtype,
        "shape": list(space.shape),
        "low": to_portable(space.low),
        "high": to_portable(space.high),
    }


def message_to_portable(msg):
    if isinstance(msg, wire.Hello):
        return {"type": "hello", "version": msg.version, "agents": list(msg.agents)}
    if isinstance(msg, wire.HelloAck):
        return {
            "type": "hello_ack",
            "agents": list(msg.agents),
            "observation_space": {k: space_to_portable(v) for k, v in msg.observation_space.items()},
            "action_space": {k: space_to_portable(v) for k, v in msg.action_space.items()},
            "barrier_timeout_ms": msg.barrier_timeout_ms,
        }
    if isinstance(msg, wire.Reset):
        return {"type": "reset", "seed": None if msg.seed is None else str(msg.seed)}
    if isinstance(msg, wire.ResetResult):
        return {
            "type": "reset_result",
            "observation": {k: to_portable(v) for k, v in msg.observation.items()},
            "info": {k: to_portable(v) for k, v in msg.info.items()},
        }
    if isinstance(msg, wire.Step):
        return {"type": "step", "actions": {k: to_portable(v) for k, v in msg.actions.items()}}
    if isinstance(msg, wire.StepResultMsg):
        return {
            "type": "step_result",
            "observation": {k: to_portable(v) for k, v in msg.observation.items()},
            "reward": dict(msg.reward),
            "done": dict(msg.done),
            "last_action": {k: to_portable(v) for k, v in msg.last_action.items()},
            "info": {k: to_portable(v) for k, v in msg.info.items()},
        }
    if isinstance(msg, wire.CloseMsg):
        return {"type": "close"}
    if isinstance(msg, wire.SideChannelMsg):
        return {"type": "side_channel", "key": msg.key, "value": to_portable(msg.value)}
    if isinstance(msg, wire.SpaceQuery):
        return {"type": "space_query"}
    if isinstance(msg, wire.SpaceReply):
        return {
            "type": "space_reply",
            "observation_space": {k: space_to_portable(v) for k, v in msg.observation_space.items()},
            "action_space": {k: space_to_portable(v) for k, v in msg.action_space.items()},
        }
    if isinstance(msg, wire.ErrorMsg):
        return {"type": "error", "code": msg.code, "message": msg.message}
    raise TypeError(msg)


GRID_OBS = {
    "agent0": Box.of((0, 0), (4, 4), shape=(2,), dtype="i64"),
    "agent1": Box.of((0, 0), (4, 4), shape=(2,), dtype="i64"),
}
GRID_ACT = {"agent0": Discrete(5), "agent1": Discrete(5)}
PEND_OBS = {"agent0": Box.of((-1.0, -1.0, -8.0), (1.0, 1.0, 8.0), shape=(3,))}
PEND_ACT = {"agent0": Box.of(-2.0, 2.0, shape=(1,))}

MESSAGE_ENTRIES = [
    ("hello_claim_all", wire.Hello(version=1, agents=())),
    ("hello_two_agents", wire.Hello(version=1, agents=("agent0", "agent1"))),
    (
        "hello_ack_gridworld",
        wire.HelloAck(
            agents=("agent0", "agent1"),
            observation_space=GRID_OBS,
            action_space=GRID_ACT,
            barrier_timeout_ms=30000,
        ),
    ),
    (
        "hello_ack_pendulum",
        wire.HelloAck(
            agents=("agent0",),
            observation_space=PEND_OBS,
            action_space=PEND_ACT,
            barrier_timeout_ms=30000,
        ),
    ),
    ("reset_no_seed", wire.Reset(seed=None)),
    ("reset_seed_5", wire.Reset(seed=5)),
    ("reset_seed_max", wire.Reset(seed=(1 << 64) - 1)),
    (
        "reset_result_gridworld",
        wire.ResetResult(
            observation={
                "agent0": Tensor([0, 0], dtype="i64"),
                "agent1": Tensor([1, 0], dtype="i64"),
            },
            info={},
        ),
    ),
    ("step_discrete", wire.Step(actions={"agent0": 3, "agent1": 0})),
    ("step_box", wire.Step(actions={"agent0": Tensor([0.5], dtype="f64")})),
    (
        "step_result_mixed",
        wire.StepResultMsg(
            observation={
                "agent0": Tensor([1, 0], dtype="i64"),
                "agent1": Tensor([1, 1], dtype="i64"),
            },
            reward={"agent0": -1.0, "agent1": 10.0},
            done={"agent0": False, "agent1": True},
            last_action={"agent0": 3, "agent1": 0},
            info={"note": "golden"},
        ),
    ),
    ("close", wire.CloseMsg()),
    ("side_channel_int", wire.SideChannelMsg(key="env::difficulty", value=2)),
    ("side_channel_bytes", wire.SideChannelMsg(key="blob", value=b"\x00\xff")),
    ("space_query", wire.SpaceQuery()),
    ("space_reply_pendulum", wire.SpaceReply(observation_space=PEND_OBS, action_space=PEND_ACT)),
    ("error_barrier_timeout", wire.ErrorMsg(code=5, message="barrier timed out")),
]


def main() -> None:
    golden = ROOT / "golden"
    golden.mkdir(exist_ok=True)

    with open(golden / "value_corpus.jsonl", "w") as out:
        for name, value in VALUE_ENTRIES:
            hexed = wire.encode_value(value).hex()
            out.write(
                json.dumps(
                    {"name": name, "value": to_portable(value), "hex": hexed},
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )
    print(f"wrote {len(VALUE_ENTRIES)} value entries")

    with open(golden / "message_corpus.jsonl", "w") as out:
        for name, msg in MESSAGE_ENTRIES:
            hexed = wire.encode_message(msg).hex()
            out.write(
                json.dumps(
                    {"name": name, "message": message_to_portable(msg), "hex": hexed},
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )
    print(f"wrote {len(MESSAGE_ENTRIES)} message entries")


if __name__ == "__main__":
    main()
