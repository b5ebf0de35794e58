"""Value model and space descriptors."""

import numpy as np
import pytest

from envlink.prng import SplitMix64
from envlink.spaces import Box, Discrete, contains, sample
from envlink.values import (
    Tensor,
    check_value,
    from_portable,
    to_portable,
    values_equal,
)


class TestTensor:
    def test_equality_is_bitwise(self):
        a = Tensor([1.0, 2.0], dtype="f64")
        b = Tensor([1.0, 2.0], dtype="f64")
        c = Tensor([1.0, 2.0], dtype="f32")
        assert a == b
        assert a != c
        assert a != Tensor([1.0, 2.0], dtype="f64", shape=(2, 1))

    def test_nan_equal_to_itself_bitwise(self):
        a = Tensor([float("nan")], dtype="f64")
        b = Tensor([float("nan")], dtype="f64")
        assert a == b

    def test_rejects_unknown_dtype(self):
        with pytest.raises(ValueError):
            Tensor([1], dtype="f16")

    def test_shape_and_data(self):
        t = Tensor([[1, 2, 3], [4, 5, 6]], dtype="i32")
        assert t.shape == (2, 3)
        assert t.tolist() == [[1, 2, 3], [4, 5, 6]]
        assert len(t.tobytes()) == 24

    def test_array_is_readonly(self):
        t = Tensor([1, 2], dtype="i64")
        with pytest.raises(ValueError):
            t.array[0] = 9


class TestCheckValue:
    def test_accepts_full_tree(self):
        check_value(
            {
                "a": [True, 1, 2.5, "s", b"\x00", Tensor([1], dtype="u8")],
                "b": {"nested": []},
            }
        )

    def test_rejects_out_of_range_int(self):
        with pytest.raises(ValueError):
            check_value(1 << 63)
        check_value((1 << 63) - 1)
        check_value(-(1 << 63))

    def test_rejects_non_string_keys(self):
        with pytest.raises(ValueError):
            check_value({1: 2})

    def test_rejects_alien_types(self):
        with pytest.raises(ValueError):
            check_value(object())


class TestValuesEqual:
    def test_bool_is_not_int(self):
        assert not values_equal(True, 1)
        assert not values_equal(0, False)

    def test_float_bitwise(self):
        assert values_equal(float("nan"), float("nan"))
        assert not values_equal(0.0, -0.0)
        assert not values_equal(1.0, 1)

    def test_containers(self):
        assert values_equal({"a": [1, 2.0]}, {"a": [1, 2.0]})
        assert not values_equal({"a": 1}, {"b": 1})
        assert not values_equal([1, 2], [1])


class TestPortable:
    @pytest.mark.parametrize(
        "value",
        [
            True,
            -5,
            (1 << 63) - 1,
            3.141592653589793,
            "héllo",
            b"\x00\xff",
            Tensor([[1, 2], [3, 4]], dtype="i64"),
            Tensor([1.5, -0.25], dtype="f32"),
            [1, [2, [3]]],
            {"k": {"kk": 1}, "z": []},
        ],
    )
    def test_roundtrip(self, value):
        assert values_equal(from_portable(to_portable(value)), value)


class TestSpaces:
    def test_discrete_requires_positive_n(self):
        with pytest.raises(ValueError):
            Discrete(0)
        with pytest.raises(ValueError):
            Discrete(True)
        assert Discrete(1).n == 1

    def test_box_validates_bounds(self):
        with pytest.raises(ValueError):
            Box(Tensor([1.0]), Tensor([0.0]))
        with pytest.raises(ValueError):
            Box(Tensor([0.0]), Tensor([0.0, 1.0]))
        with pytest.raises(ValueError):
            Box(Tensor([0.0]), Tensor([1], dtype="i64"))

    def test_box_of_broadcasts(self):
        b = Box.of(-2.0, 2.0, shape=(3,))
        assert b.low.tolist() == [-2.0, -2.0, -2.0]
        assert b.dtype == "f64" and b.shape == (3,)

    def test_discrete_contains(self):
        d = Discrete(5)
        assert contains(d, 0) and contains(d, 4)
        assert not contains(d, 5)
        assert not contains(d, -1)
        assert not contains(d, True)  # bool is not an action index
        assert not contains(d, 2.0)

    def test_box_contains(self):
        b = Box.of(0.0, 1.0, shape=(2,))
        assert contains(b, Tensor([0.0, 1.0]))
        assert not contains(b, Tensor([0.0, 1.1]))
        assert not contains(b, Tensor([0.0, 1.0], dtype="f32"))
        assert not contains(b, Tensor([0.0], dtype="f64"))
        assert not contains(b, [0.0, 1.0])

    def test_sample_membership_and_determinism(self):
        spaces = [
            Discrete(7),
            Box.of(-2.0, 2.0, shape=(3,)),
            Box.of(0, 9, shape=(2, 2), dtype="i64"),
            Box.of(0, 255, shape=(4,), dtype="u8"),
            Box.of(-1.0, 1.0, shape=(2,), dtype="f32"),
        ]
        for seed in (0, 1, 99):
            a, b = SplitMix64(seed), SplitMix64(seed)
            for space in spaces:
                va, vb = sample(space, a), sample(space, b)
                assert values_equal(va, vb)
                assert contains(space, va)

    def test_discrete_sample_recipe_is_pinned(self):
        # One uniform per draw: floor(u * n).
        rng = SplitMix64(4)
        expected = []
        check = SplitMix64(4)
        for _ in range(50):
            expected.append(int(check.uniform() * 6))
        got = [sample(Discrete(6), rng) for _ in range(50)]
        assert got == expected

    def test_box_sample_recipe_is_pinned(self):
        # Row-major, one uniform per element, low + u * (high - low) in f64.
        rng = SplitMix64(11)
        box = Box.of(-2.0, 2.0, shape=(2,))
        got = sample(box, rng)
        check = SplitMix64(11)
        expected = [-2.0 + check.uniform() * 4.0, -2.0 + check.uniform() * 4.0]
        assert got.tolist() == expected

    def test_f32_box_sample_rounds_like_numpy(self):
        rng = SplitMix64(3)
        box = Box.of(-1.0, 1.0, shape=(8,), dtype="f32")
        got = sample(box, rng)
        check = SplitMix64(3)
        raw = np.array([-1.0 + check.uniform() * 2.0 for _ in range(8)], dtype=np.float64)
        assert got.tobytes() == raw.astype("<f4").tobytes()
