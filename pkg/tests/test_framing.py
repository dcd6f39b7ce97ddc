import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vitertile.codes import encode
from vitertile.framing import (
    DEFAULT_FRAME_LEN,
    DEFAULT_OVERLAP,
    FramePlan,
    plan_frames,
    decode_stream,
)
from vitertile.matrix import DecoderConfig
from vitertile.reference import decode_reference


def stream_llr(spec, n, sigma, seed):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, n, dtype=np.uint8)
    coded = encode(bits, spec).reshape(n, -1).T
    return bits, 1.0 - 2.0 * coded + rng.normal(0.0, sigma, coded.shape)


class TestPlan:
    def test_defaults(self):
        assert (DEFAULT_FRAME_LEN, DEFAULT_OVERLAP) == (256, 64)

    def test_short_stream_single_window(self):
        plan = plan_frames(100, frame_len=256, overlap=64)
        assert plan.windows == (plan.windows[0],)
        w = plan.windows[0]
        assert (w.start, w.stop, w.emit_start, w.emit_stop) == (0, 100, 0, 100)

    def test_interior_windows_have_two_sided_overlap(self):
        plan = plan_frames(1000, frame_len=256, overlap=64)
        assert len(plan.windows) == 4
        w = plan.windows[1]
        assert (w.start, w.stop) == (256 - 64, 512 + 64)
        assert (w.emit_start, w.emit_stop) == (256, 512)
        first, last = plan.windows[0], plan.windows[-1]
        assert first.start == 0 and first.stop == 256 + 64
        assert last.stop == 1000 and last.start == 768 - 64

    @given(
        n=st.integers(1, 3000),
        frame_len=st.integers(1, 400),
        overlap=st.integers(0, 100),
    )
    @settings(max_examples=100, deadline=None)
    def test_emit_ranges_tile_the_stream(self, n, frame_len, overlap):
        plan = plan_frames(n, frame_len, overlap)
        edges = [(w.emit_start, w.emit_stop) for w in plan.windows]
        assert edges[0][0] == 0 and edges[-1][1] == n
        for (_, stop), (start, _) in zip(edges, edges[1:]):
            assert stop == start
        for w in plan.windows:
            assert w.start <= w.emit_start < w.emit_stop <= w.stop
            assert w.emit_start - w.start <= overlap
            assert w.stop - w.emit_stop <= overlap

    def test_memory_estimate_scales_with_overlap(self, spec171):
        lean = plan_frames(4096, 256, 0).survivor_memory_estimate(spec171)
        fat = plan_frames(4096, 256, 64).survivor_memory_estimate(spec171)
        assert lean == 64 * 4096
        assert fat == pytest.approx(lean * 1.25)

    def test_validation(self):
        with pytest.raises(ValueError):
            plan_frames(0)
        with pytest.raises(ValueError):
            plan_frames(10, frame_len=0)
        with pytest.raises(ValueError):
            plan_frames(10, overlap=-1)

    def test_to_json(self):
        plan = plan_frames(600, 256, 64)
        data = json.loads(plan.to_json())
        assert data["total_stages"] == 600
        assert len(data["windows"]) == len(plan.windows)


class TestDecodeStream:
    def test_noiseless_equals_unframed(self, spec171):
        bits, llr = stream_llr(spec171, 1500, 0.0, seed=23)
        plan = plan_frames(1500, 256, 64)
        out = decode_stream(llr, spec171, plan)
        np.testing.assert_array_equal(out, bits)

    @pytest.mark.parametrize("decoder,config", [
        ("reference", None),
        ("matrix", DecoderConfig(radix=2)),
        ("matrix", DecoderConfig(radix=4, optimized=True)),
    ])
    def test_noisy_framed_close_to_unframed(self, spec171, decoder, config):
        bits, llr = stream_llr(spec171, 3000, 0.7, seed=24)
        plan = plan_frames(3000, 256, 64)
        framed = decode_stream(llr, spec171, plan, decoder=decoder, config=config)
        unframed = decode_reference(llr, spec171)
        assert np.count_nonzero(framed != bits) <= np.count_nonzero(unframed != bits) + 3

    def test_zero_overlap_is_worse_on_noisy_stream(self, spec171):
        bits, llr = stream_llr(spec171, 20000, 0.85, seed=25)
        with_overlap = decode_stream(llr, spec171, plan_frames(20000, 256, 64))
        without = decode_stream(llr, spec171, plan_frames(20000, 256, 0))
        err_with = np.count_nonzero(with_overlap != bits)
        err_without = np.count_nonzero(without != bits)
        assert err_without > err_with

    def test_threaded_matches_serial(self, spec171):
        _, llr = stream_llr(spec171, 4000, 0.9, seed=26)
        plan = plan_frames(4000, 256, 64)
        serial = decode_stream(llr, spec171, plan)
        threaded = decode_stream(llr, spec171, plan, workers=4)
        np.testing.assert_array_equal(serial, threaded)

    def test_matrix_and_reference_agree_when_quiet(self, spec171):
        _, llr = stream_llr(spec171, 2000, 0.3, seed=27)
        plan = plan_frames(2000, 256, 64)
        ref = decode_stream(llr, spec171, plan, decoder="reference")
        mat = decode_stream(llr, spec171, plan, decoder="matrix", config=DecoderConfig(radix=4, optimized=True))
        np.testing.assert_array_equal(ref, mat)

    def test_rejects_mismatched_plan_and_decoder(self, spec171):
        _, llr = stream_llr(spec171, 100, 0.0, seed=28)
        with pytest.raises(ValueError):
            decode_stream(llr, spec171, plan_frames(200))
        with pytest.raises(ValueError):
            decode_stream(llr, spec171, plan_frames(100), decoder="magic")
