"""Scalar soft/hard-decision Viterbi decoder; the golden oracle for the tile decoders.

The forward pass is vectorized over states and (optionally) over a batch of
frames, but is algorithmically the textbook per-stage ACS recursion.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .codes import CodeSpec, branch_output

__all__ = [
    "SoftFrame",
    "DecoderState",
    "branch_metric",
    "forward",
    "traceback",
    "decode_reference",
    "decode_batch",
    "predecessors",
]


@dataclass
class SoftFrame:
    """LLR input, shape (B, N); positive LLR means the coded bit is more likely 0."""

    llr: np.ndarray
    channel_precision: str = "single"

    def __post_init__(self) -> None:
        if self.channel_precision not in ("half", "single"):
            raise ValueError(f"unknown channel precision {self.channel_precision!r}")
        arr = np.asarray(self.llr, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValueError("LLR input must have shape (B, N) with N >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("LLR values must be finite")
        if self.channel_precision == "half":
            arr = arr.astype(np.float16).astype(np.float64)
        self.llr = arr

    @property
    def num_stages(self) -> int:
        return self.llr.shape[1]


@dataclass
class DecoderState:
    """Forward-pass output: survivor table plus final path metrics."""

    survivors: np.ndarray  # (N, S) uint8, 1 bit: which of the 2 predecessors won
    final_metrics: np.ndarray  # (S,)
    metric_history: np.ndarray | None = None  # (N, S) when requested


def predecessors(state: int, spec: CodeSpec) -> tuple[int, int]:
    """The two predecessor states of `state`, in tie-rule order (i', i'')."""
    beta = state & (spec.num_butterflies - 1)
    return 2 * beta, 2 * beta + 1


@lru_cache(maxsize=None)
def _acs_tables(spec: CodeSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-state predecessor indices and +-1 branch-output signs for both branches."""
    s = spec.num_states
    b = spec.outputs_per_bit
    pred0 = np.empty(s, dtype=np.int64)
    pred1 = np.empty(s, dtype=np.int64)
    sgn0 = np.empty((s, b), dtype=np.float64)
    sgn1 = np.empty((s, b), dtype=np.float64)
    for j in range(s):
        i0, i1 = predecessors(j, spec)
        u = j >> (spec.constraint_length - 2)
        pred0[j], pred1[j] = i0, i1
        for i, sgn in ((i0, sgn0), (i1, sgn1)):
            to, bo = branch_output(i, u, spec)
            assert to == j
            sgn[j] = [1.0 - 2.0 * bit for bit in bo]
    return pred0, pred1, sgn0, sgn1


def branch_metric(branch_bits, llr_t) -> float:
    """Correlation between a branch output and the received LLRs at one stage."""
    bits = np.asarray(branch_bits, dtype=np.float64)
    llr = np.asarray(llr_t, dtype=np.float64)
    if bits.shape != llr.shape:
        raise ValueError("branch output and LLR lengths differ")
    return float(np.sum((1.0 - 2.0 * bits) * llr))


def forward_batch(
    llrs: np.ndarray,
    spec: CodeSpec,
    initial_metrics: np.ndarray | None = None,
    renormalize: bool = False,
    keep_history: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """ACS forward pass over a batch of frames.

    llrs: (F, B, N).  Returns (survivors (F, N, S), final metrics (F, S),
    metric history (F, N, S) or None).  Ties select the second predecessor.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    f, b, n = llrs.shape
    s = spec.num_states
    pred0, pred1, sgn0, sgn1 = _acs_tables(spec)
    if initial_metrics is None:
        lam = np.zeros((f, s), dtype=np.float64)
    else:
        lam = np.broadcast_to(np.asarray(initial_metrics, dtype=np.float64), (f, s)).copy()
    surv = np.empty((f, n, s), dtype=np.uint8)
    hist = np.empty((f, n, s), dtype=np.float64) if keep_history else None
    for t in range(n):
        llr_t = llrs[:, :, t]
        cand0 = lam[:, pred0] + llr_t @ sgn0.T
        cand1 = lam[:, pred1] + llr_t @ sgn1.T
        take1 = cand1 >= cand0
        lam = np.where(take1, cand1, cand0)
        surv[:, t, :] = take1
        if renormalize:
            lam -= lam.max(axis=1, keepdims=True)
        if keep_history:
            hist[:, t, :] = lam
    return surv, lam, hist


def traceback_batch(
    survivors: np.ndarray, final_metrics: np.ndarray, spec: CodeSpec
) -> np.ndarray:
    """Walk survivors from the best final state; returns decoded bits (F, N)."""
    f, n, _ = survivors.shape
    mask = spec.num_butterflies - 1
    shift = spec.constraint_length - 2
    j = np.argmax(final_metrics, axis=1)
    out = np.empty((f, n), dtype=np.uint8)
    rows = np.arange(f)
    for t in range(n - 1, -1, -1):
        out[:, t] = j >> shift
        j = 2 * (j & mask) + survivors[rows, t, j]
    return out


def forward(
    frame: SoftFrame | np.ndarray,
    spec: CodeSpec,
    initial_metrics: np.ndarray | None = None,
    renormalize: bool = False,
    keep_history: bool = False,
) -> DecoderState:
    llr = frame.llr if isinstance(frame, SoftFrame) else np.asarray(frame, dtype=np.float64)
    surv, lam, hist = forward_batch(
        llr[None, :, :], spec, initial_metrics, renormalize, keep_history
    )
    return DecoderState(surv[0], lam[0], hist[0] if hist is not None else None)


def traceback(state: DecoderState, spec: CodeSpec) -> np.ndarray:
    return traceback_batch(
        state.survivors[None, :, :], state.final_metrics[None, :], spec
    )[0]


def _to_soft(frame, spec: CodeSpec, mode: str) -> np.ndarray:
    llr = frame.llr if isinstance(frame, SoftFrame) else np.asarray(frame, dtype=np.float64)
    if llr.ndim != 2 or llr.shape[0] != spec.outputs_per_bit:
        raise ValueError("LLR input must have shape (B, N)")
    if mode == "hard":
        # hard input is bits {0,1}; map 0 -> +1, 1 -> -1
        if not np.all((llr == 0) | (llr == 1)):
            raise ValueError("hard mode expects a bit array")
        llr = 1.0 - 2.0 * llr
    elif mode != "soft":
        raise ValueError(f"unknown mode {mode!r}")
    return llr


def decode_reference(
    frame: SoftFrame | np.ndarray,
    spec: CodeSpec,
    mode: str = "soft",
    initial_metrics: np.ndarray | None = None,
    renormalize: bool = False,
) -> np.ndarray:
    """Full decode: forward then traceback. Hard mode takes bits, soft takes LLRs."""
    llr = _to_soft(frame, spec, mode)
    state = forward(llr, spec, initial_metrics, renormalize)
    return traceback(state, spec)


def decode_batch(
    llrs: np.ndarray,
    spec: CodeSpec,
    mode: str = "soft",
    renormalize: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Decode frames (F, B, N); returns (bits (F, N), final metric per frame)."""
    llrs = np.asarray(llrs, dtype=np.float64)
    if mode == "hard":
        llrs = np.where(llrs >= 0.0, 1.0, -1.0)
    surv, lam, _ = forward_batch(llrs, spec, renormalize=renormalize)
    bits = traceback_batch(surv, lam, spec)
    return bits, lam.max(axis=1)
