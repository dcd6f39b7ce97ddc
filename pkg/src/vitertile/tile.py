"""Emulated 16x16 fused multiply-accumulate tile with tensor-core-like precision.

A and B operands are binary16; the accumulator (C/D) is binary16 or binary32
per policy.  Products are formed in binary32 and accumulated in ascending-k
order, with a single final rounding to the policy precision.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TILE", "HALF_MAX", "PrecisionPolicy", "TileOpCounter", "round_to_half", "mma_16x16"]

TILE = 16
HALF_MAX = 65504.0

_PRECISIONS = ("half", "single")


@dataclass(frozen=True)
class PrecisionPolicy:
    """Accumulator (C/D) and channel-input precision selection."""

    accumulator: str = "single"
    channel_input: str = "single"

    def __post_init__(self) -> None:
        for name in (self.accumulator, self.channel_input):
            if name not in _PRECISIONS:
                raise ValueError(f"unknown precision {name!r}")


@dataclass
class TileOpCounter:
    """Counts tile invocations and survivor-table write passes for one decode."""

    mma_ops: int = 0
    survivor_write_passes: int = 0
    stages: int = 0

    @property
    def ops_per_stage(self) -> float:
        return self.mma_ops / self.stages if self.stages else 0.0

    def reset(self) -> None:
        self.mma_ops = 0
        self.survivor_write_passes = 0
        self.stages = 0


def round_to_half(x):
    """Round to the nearest binary16 value (ties to even; overflow to +-inf)."""
    with np.errstate(over="ignore"):
        out = np.asarray(x, dtype=np.float64).astype(np.float16)
    if np.ndim(x) == 0:
        return float(out)
    return out


def mma_16x16(
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    policy: PrecisionPolicy,
    counter: TileOpCounter | None = None,
) -> np.ndarray:
    """D = A x B + C on one 16x16 tile; b and c may carry leading batch dims.

    A and B must already round-trip through binary16.  The result dtype is
    float16 for a half accumulator and float32 otherwise.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    c = np.asarray(c)
    if a.shape != (TILE, TILE) or b.shape[-2:] != (TILE, TILE) or c.shape[-2:] != (TILE, TILE):
        raise ValueError("operands must be 16x16 tiles (with optional batch dims on B/C)")
    with np.errstate(over="ignore"):
        a32 = a.astype(np.float16).astype(np.float32)
        b32 = b.astype(np.float16).astype(np.float32)
        acc = c.astype(np.float32).copy()
        acc = np.broadcast_to(acc, b32.shape[:-2] + (TILE, TILE)).copy()
        for k in range(TILE):
            acc += a32[:, k][:, None] * b32[..., k, :][..., None, :]
        if counter is not None:
            counter.mma_ops += 1
        if policy.accumulator == "half":
            return acc.astype(np.float16)
        return acc
