"""Overlapping-frame decomposition of a long LLR stream.

Each window decodes independently from all-zero initial metrics; a leading
overlap warms up the path metrics and a trailing overlap lets traceback start
past the emitted range, so only the emit-range bits are kept.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .codes import CodeSpec
from .matrix import DecoderConfig, decode_matrix_batch
from .reference import decode_batch

__all__ = ["Window", "FramePlan", "plan_frames", "decode_stream", "DEFAULT_FRAME_LEN", "DEFAULT_OVERLAP"]

DEFAULT_FRAME_LEN = 256
DEFAULT_OVERLAP = 64


@dataclass(frozen=True)
class Window:
    start: int
    stop: int
    emit_start: int
    emit_stop: int

    @property
    def length(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class FramePlan:
    total_stages: int
    frame_len: int
    overlap: int
    windows: tuple[Window, ...]

    def survivor_memory_estimate(self, spec: CodeSpec) -> float:
        """Order-of-magnitude survivor storage in units of one entry."""
        return spec.num_states * self.total_stages * (1.0 + self.overlap / self.frame_len)

    def to_json(self) -> str:
        return json.dumps(
            {
                "total_stages": self.total_stages,
                "frame_len": self.frame_len,
                "overlap": self.overlap,
                "windows": [
                    {
                        "start": w.start,
                        "stop": w.stop,
                        "emit_start": w.emit_start,
                        "emit_stop": w.emit_stop,
                    }
                    for w in self.windows
                ],
            },
            indent=2,
        )


def plan_frames(total_stages: int, frame_len: int = DEFAULT_FRAME_LEN, overlap: int = DEFAULT_OVERLAP) -> FramePlan:
    """Split `total_stages` into windows of `frame_len` payload stages with
    `overlap` extra history stages on each side (truncated at stream edges)."""
    if total_stages < 1:
        raise ValueError("stream must have at least one stage")
    if frame_len < 1:
        raise ValueError("frame length must be >= 1")
    if overlap < 0:
        raise ValueError("overlap must be >= 0")
    windows = []
    for emit_start in range(0, total_stages, frame_len):
        emit_stop = min(emit_start + frame_len, total_stages)
        start = max(0, emit_start - overlap)
        stop = min(total_stages, emit_stop + overlap)
        windows.append(Window(start, stop, emit_start, emit_stop))
    return FramePlan(total_stages, frame_len, overlap, tuple(windows))


def _decode_windows(llr, spec, windows, decoder, config, renormalize):
    """Decode same-length windows as one batch; returns bits per window."""
    batch = np.stack([llr[:, w.start : w.stop] for w in windows])
    if decoder == "reference":
        bits, _ = decode_batch(batch, spec, renormalize=renormalize)
    else:
        bits = decode_matrix_batch(batch, spec, config).bits
    return bits


def decode_stream(
    llr: np.ndarray,
    spec: CodeSpec,
    plan: FramePlan,
    decoder: str = "reference",
    config: DecoderConfig | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Decode an (B, N) LLR stream window by window and stitch the emit ranges.

    Windows are independent; results do not depend on execution order.
    """
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape[1] != plan.total_stages:
        raise ValueError("plan does not match stream length")
    if decoder not in ("reference", "matrix"):
        raise ValueError(f"unknown decoder {decoder!r}")
    renormalize = bool(config.renormalize) if config else False

    by_len: dict[int, list[Window]] = {}
    for w in plan.windows:
        by_len.setdefault(w.length, []).append(w)

    out = np.empty(plan.total_stages, dtype=np.uint8)

    def run(windows: list[Window]) -> None:
        if workers > 1 and len(windows) > workers:
            parts = np.array_split(np.arange(len(windows)), workers)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(
                    pool.map(
                        lambda idx: _decode_windows(
                            llr, spec, [windows[i] for i in idx], decoder, config, renormalize
                        ),
                        [p for p in parts if len(p)],
                    )
                )
            bits = np.concatenate(results)
        else:
            bits = _decode_windows(llr, spec, windows, decoder, config, renormalize)
        for row, w in zip(bits, windows):
            out[w.emit_start : w.emit_stop] = row[w.emit_start - w.start : w.emit_stop - w.start]

    for windows in by_len.values():
        run(windows)
    return out
