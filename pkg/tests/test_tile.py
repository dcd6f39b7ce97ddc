import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vitertile.tile import HALF_MAX, TILE, PrecisionPolicy, TileOpCounter, mma_16x16, round_to_half


def half_oracle(x: float) -> float:
    """binary16 rounding via the struct codec (round to nearest even, overflow
    raises, which maps to +-inf)."""
    try:
        return struct.unpack("<e", struct.pack("<e", x))[0]
    except OverflowError:
        return math.inf if x > 0 else -math.inf


class TestPolicy:
    def test_defaults(self):
        p = PrecisionPolicy()
        assert (p.accumulator, p.channel_input) == ("single", "single")

    def test_rejects_unknown_precision(self):
        with pytest.raises(ValueError):
            PrecisionPolicy(accumulator="double")
        with pytest.raises(ValueError):
            PrecisionPolicy(channel_input="int8")


class TestRoundToHalf:
    def test_worked_values(self):
        assert round_to_half(1.0 + 2.0**-12) == 1.0  # below the halfway point
        assert round_to_half(1.0 + 2.0**-11) == 1.0  # halfway, ties to even
        assert round_to_half(1.0 + 3.0 * 2.0**-12) == 1.0 + 2.0**-10
        assert round_to_half(70000.0) == math.inf
        assert round_to_half(-70000.0) == -math.inf
        assert round_to_half(HALF_MAX) == HALF_MAX

    @given(x=st.floats(-1e6, 1e6, allow_nan=False))
    @settings(max_examples=300)
    def test_matches_struct_codec(self, x):
        got = round_to_half(x)
        want = half_oracle(x)
        assert got == want or (math.isinf(got) and math.isinf(want) and got == want)

    def test_array_form(self):
        out = round_to_half(np.array([0.1, 70000.0]))
        assert out.dtype == np.float16
        assert out[0] == np.float16(0.1) and np.isinf(out[1])


class TestMma:
    def test_identity_passthrough(self):
        policy = PrecisionPolicy()
        b = np.arange(256, dtype=np.float64).reshape(TILE, TILE)
        c = np.ones((TILE, TILE))
        d = mma_16x16(np.eye(TILE), b, c, policy)
        assert d.dtype == np.float32
        np.testing.assert_array_equal(d, (b + 1).astype(np.float32))

    def test_shape_checks(self):
        policy = PrecisionPolicy()
        with pytest.raises(ValueError):
            mma_16x16(np.eye(8), np.eye(8), np.eye(8), policy)

    def test_counter_increments_per_call(self):
        policy = PrecisionPolicy()
        counter = TileOpCounter()
        z = np.zeros((TILE, TILE))
        mma_16x16(z, z, z, policy, counter)
        mma_16x16(z, np.zeros((3, TILE, TILE)), z, policy, counter)
        assert counter.mma_ops == 2
        counter.stages = 4
        assert counter.ops_per_stage == 0.5
        counter.reset()
        assert counter.mma_ops == 0 and counter.ops_per_stage == 0.0

    def test_batched_matches_loop(self):
        policy = PrecisionPolicy()
        rng = np.random.default_rng(12)
        a = round_to_half(rng.normal(size=(TILE, TILE)))
        b = round_to_half(rng.normal(size=(5, TILE, TILE)))
        c = rng.normal(size=(5, TILE, TILE)).astype(np.float32)
        batched = mma_16x16(a, b, c, policy)
        for i in range(5):
            np.testing.assert_array_equal(batched[i], mma_16x16(a, b[i], c[i], policy))

    def test_single_accumulation_order_and_rounding(self):
        # products accumulate in ascending k in float32, one rounding at the end
        policy = PrecisionPolicy()
        a = np.zeros((TILE, TILE))
        a[0, :3] = [2.0**12, 1.0, 1.0]
        b = np.zeros((TILE, TILE))
        b[0, 0] = 2.0**12
        b[1, 0] = 1.0
        b[2, 0] = 2.0
        d = mma_16x16(a, b, np.zeros((TILE, TILE)), policy)
        # 2^24 first: the +1 rounds away (tie to even), then +2 survives.
        # Summing small terms first would have produced 2^24 + 4 instead.
        assert d[0, 0] == np.float32(2.0**24 + 2.0)

    def test_half_accumulator_rounds_intermediates(self):
        policy = PrecisionPolicy(accumulator="half")
        a = np.zeros((TILE, TILE))
        a[0, 0] = 1.0
        b = np.zeros((TILE, TILE))
        b[0, 0] = 2048.0
        c = np.zeros((TILE, TILE))
        c[0, 0] = 1.0
        d = mma_16x16(a, b, c, policy)
        assert d.dtype == np.float16
        # 2049 is not representable in binary16; ties to even give 2048
        assert d[0, 0] == np.float16(2048.0)

    def test_half_accumulator_overflows_to_inf(self):
        policy = PrecisionPolicy(accumulator="half")
        a = np.zeros((TILE, TILE))
        a[0, :2] = 1.0
        b = np.zeros((TILE, TILE))
        b[0, 0] = HALF_MAX
        b[1, 0] = HALF_MAX
        d = mma_16x16(a, b, np.zeros((TILE, TILE)), policy)
        assert np.isinf(d[0, 0]) and d[0, 0] > 0

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=30, deadline=None)
    def test_matches_float64_reference_within_accumulation_error(self, seed):
        policy = PrecisionPolicy()
        rng = np.random.default_rng(seed)
        a = round_to_half(rng.normal(size=(TILE, TILE)))
        b = round_to_half(rng.normal(size=(TILE, TILE)))
        c = rng.normal(size=(TILE, TILE)).astype(np.float32)
        d = mma_16x16(a, b, c, policy)
        exact = a.astype(np.float64) @ b.astype(np.float64) + c.astype(np.float64)
        assert np.max(np.abs(d - exact)) < 1e-3
