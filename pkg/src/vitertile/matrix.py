"""ACS as tile multiply-accumulate: radix-2 and radix-4 packings plus the
dragonfly-group permutation optimization, and the full tile-backed decoder.

Tile layout (normative for debug dumps): A is block-structured with one
branch-output matrix per block; LLR columns of B and path-metric columns of C
are assigned left to right in ascending butterfly/dragonfly index within each
block; D mirrors C.  Carrying the path metrics in C lets one fused tile op
compute branch metrics and the add step together; max-selection runs outside
the tile.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codes import (
    CodeSpec,
    compute_bomat,
    find_dragonfly_groups,
    identical_bomat_classes,
)
from .tile import TILE, PrecisionPolicy, TileOpCounter, mma_16x16, round_to_half

__all__ = [
    "Radix2Packing",
    "Radix4Packing",
    "DecoderConfig",
    "MatrixDecodeResult",
    "pack_radix2",
    "pack_radix4",
    "forward_step_radix2",
    "forward_step_radix4",
    "decode_matrix",
    "decode_matrix_batch",
    "tile_debug_dump",
]

_BLOCK = 4  # columns per diagonal/horizontal block


@dataclass(frozen=True)
class _Tile2:
    a: np.ndarray  # (16, 16) float16
    columns: tuple[tuple[int, int], ...]  # (column, butterfly)
    b_rows: np.ndarray
    b_cols: np.ndarray
    b_sel: np.ndarray
    c_state: np.ndarray  # (16, 16) gather indices into the metric vector
    c_mask: np.ndarray  # (16, 16) float32
    rows0: np.ndarray  # candidate rows for each output state
    rows1: np.ndarray
    out_cols: np.ndarray
    out_states: np.ndarray


@dataclass(frozen=True)
class Radix2Packing:
    spec: CodeSpec
    tiles: tuple[_Tile2, ...]

    @property
    def ops_per_stage(self) -> int:
        return len(self.tiles)


@dataclass(frozen=True)
class _Tile4:
    a: np.ndarray
    columns: tuple[tuple[int, int, tuple[int, ...]], ...]  # (column, dragonfly, perm)
    b_rows: np.ndarray
    b_cols: np.ndarray
    b_sel: np.ndarray
    c_state: np.ndarray
    c_mask: np.ndarray
    cand_rows: np.ndarray  # (n_out, 4)
    cand_cols: np.ndarray  # (n_out,)
    out_states: np.ndarray  # (n_out,)
    perm_tab: np.ndarray  # (n_out, 4): candidate position -> actual left local state


@dataclass(frozen=True)
class Radix4Packing:
    spec: CodeSpec
    tiles: tuple[_Tile4, ...]
    optimized: bool
    optimization_effective: bool

    @property
    def ops_per_two_stages(self) -> int:
        return len(self.tiles)


@dataclass(frozen=True)
class DecoderConfig:
    """Which decode path to run and at what emulated precision."""

    radix: int = 2
    optimized: bool = False
    policy: PrecisionPolicy = field(default_factory=PrecisionPolicy)
    renormalize: bool = False

    def __post_init__(self) -> None:
        if self.radix not in (2, 4):
            raise ValueError("radix must be 2 or 4")


@dataclass
class MatrixDecodeResult:
    bits: np.ndarray
    final_metric: np.ndarray | float
    counter: TileOpCounter

    @property
    def q(self) -> float:
        return self.counter.ops_per_stage


# ---------------------------------------------------------------------------
# packing construction
# ---------------------------------------------------------------------------


def _chunks(seq, size):
    for i in range(0, len(seq), size):
        yield seq[i : i + size]


def pack_radix2(spec: CodeSpec) -> Radix2Packing:
    """Block-diagonal packing: 4x4 blocks share one butterfly output matrix;
    each block column serves one butterfly with that matrix."""
    b = spec.outputs_per_bit
    if b > _BLOCK:
        raise ValueError(f"butterfly output matrix width {b} exceeds block width {_BLOCK}")
    blocks: list[tuple[np.ndarray, list[int]]] = []
    for betas in identical_bomat_classes(1, spec):
        bomat = compute_bomat(betas[0], 1, spec)
        for chunk in _chunks(list(betas), _BLOCK):
            blocks.append((bomat, chunk))

    half = spec.num_butterflies
    tiles = []
    for tile_blocks in _chunks(blocks, TILE // _BLOCK):
        a = np.zeros((TILE, TILE), dtype=np.float16)
        columns: list[tuple[int, int]] = []
        b_rows, b_cols, b_sel = [], [], []
        c_state = np.zeros((TILE, TILE), dtype=np.int64)
        c_mask = np.zeros((TILE, TILE), dtype=np.float32)
        rows0, rows1, out_cols, out_states = [], [], [], []
        for d, (bomat, betas) in enumerate(tile_blocks):
            base = _BLOCK * d
            a[base : base + 4, base : base + b] = bomat
            for slot, beta in enumerate(betas):
                col = base + slot
                columns.append((col, beta))
                for bb in range(b):
                    b_rows.append(base + bb)
                    b_cols.append(col)
                    b_sel.append(bb)
                # C rows follow the bomat row order (i0, i1, i0, i1)
                for r, left in enumerate((2 * beta, 2 * beta + 1, 2 * beta, 2 * beta + 1)):
                    c_state[base + r, col] = left
                    c_mask[base + r, col] = 1.0
                for lj, state in enumerate((beta, beta + half)):
                    rows0.append(base + 2 * lj)
                    rows1.append(base + 2 * lj + 1)
                    out_cols.append(col)
                    out_states.append(state)
        tiles.append(
            _Tile2(
                a=a,
                columns=tuple(columns),
                b_rows=np.array(b_rows),
                b_cols=np.array(b_cols),
                b_sel=np.array(b_sel),
                c_state=c_state,
                c_mask=c_mask,
                rows0=np.array(rows0),
                rows1=np.array(rows1),
                out_cols=np.array(out_cols),
                out_states=np.array(out_states),
            )
        )
    return Radix2Packing(spec, tuple(tiles))


def pack_radix4(spec: CodeSpec, optimized: bool = False) -> Radix4Packing:
    """Horizontal 16x(2B) blocks, one dragonfly output matrix each.

    Unoptimized, dragonflies with identical matrices share a block (one per
    column).  Optimized, whole permutation groups share a block and member
    metrics are permuted in C / inverse-permuted in the survivors.
    """
    b = spec.outputs_per_bit
    rho = 2
    if rho * b > _BLOCK:
        raise ValueError(f"super-branch output width {rho * b} exceeds block width {_BLOCK}")
    identity = tuple(range(1 << rho))

    plain_blocks: list[tuple[np.ndarray, list[tuple[int, tuple[int, ...]]]]] = []
    for fs in identical_bomat_classes(rho, spec):
        bomat = compute_bomat(fs[0], rho, spec)
        for chunk in _chunks(list(fs), _BLOCK):
            plain_blocks.append((bomat, [(f, identity) for f in chunk]))

    effective = True
    if optimized:
        blocks = []
        for group in find_dragonfly_groups(rho, spec):
            bomat = compute_bomat(group.representative, rho, spec)
            members = [(f, group.permutations[f]) for f in group.members]
            for chunk in _chunks(members, _BLOCK):
                blocks.append((bomat, chunk))
        if len(blocks) >= len(plain_blocks):
            # group structure buys nothing for this code; fall back
            blocks = plain_blocks
            effective = False
    else:
        blocks = plain_blocks
        effective = False

    n_right = 1 << rho
    right_step = spec.num_dragonflies(rho)
    tiles = []
    for tile_blocks in _chunks(blocks, TILE // _BLOCK):
        a = np.zeros((TILE, TILE), dtype=np.float16)
        columns: list[tuple[int, int, tuple[int, ...]]] = []
        b_rows, b_cols, b_sel = [], [], []
        c_state = np.zeros((TILE, TILE), dtype=np.int64)
        c_mask = np.zeros((TILE, TILE), dtype=np.float32)
        cand_rows, cand_cols, out_states, perm_tab = [], [], [], []
        for d, (bomat, members) in enumerate(tile_blocks):
            base = _BLOCK * d
            a[:, base : base + rho * b] = bomat
            for slot, (f, perm) in enumerate(members):
                col = base + slot
                columns.append((col, f, perm))
                for bb in range(rho * b):
                    b_rows.append(base + bb)
                    b_cols.append(col)
                    b_sel.append(bb)
                for j in range(n_right):
                    for i in range(n_right):
                        c_state[j * n_right + i, col] = (1 << rho) * f + perm[i]
                        c_mask[j * n_right + i, col] = 1.0
                    cand_rows.append([j * n_right + i for i in range(n_right)])
                    cand_cols.append(col)
                    out_states.append(j * right_step + f)
                    perm_tab.append(list(perm))
        tiles.append(
            _Tile4(
                a=a,
                columns=tuple(columns),
                b_rows=np.array(b_rows),
                b_cols=np.array(b_cols),
                b_sel=np.array(b_sel),
                c_state=c_state,
                c_mask=c_mask,
                cand_rows=np.array(cand_rows),
                cand_cols=np.array(cand_cols),
                out_states=np.array(out_states),
                perm_tab=np.array(perm_tab, dtype=np.uint8),
            )
        )
    return Radix4Packing(spec, tuple(tiles), optimized, effective)


# ---------------------------------------------------------------------------
# forward steps
# ---------------------------------------------------------------------------


def _metric_dtype(policy: PrecisionPolicy):
    return np.float16 if policy.accumulator == "half" else np.float32


def forward_step_radix2(
    lam: np.ndarray,
    llr_t: np.ndarray,
    packing: Radix2Packing,
    policy: PrecisionPolicy,
    counter: TileOpCounter | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One trellis stage through the tiles.

    lam: (F, S) metrics, llr_t: (F, B).  Returns (new metrics, survivor bits).
    """
    f = lam.shape[0]
    s = packing.spec.num_states
    llr_half = round_to_half(llr_t).astype(np.float32)
    lam_new = np.empty((f, s), dtype=_metric_dtype(policy))
    surv = np.empty((f, s), dtype=np.uint8)
    for tile in packing.tiles:
        bt = np.zeros((f, TILE, TILE), dtype=np.float32)
        bt[:, tile.b_rows, tile.b_cols] = llr_half[:, tile.b_sel]
        ct = lam[:, tile.c_state] * tile.c_mask
        d = mma_16x16(tile.a, bt, ct, policy, counter)
        v0 = d[:, tile.rows0, tile.out_cols]
        v1 = d[:, tile.rows1, tile.out_cols]
        take1 = v1 >= v0
        lam_new[:, tile.out_states] = np.where(take1, v1, v0)
        surv[:, tile.out_states] = take1
    return lam_new, surv


def forward_step_radix4(
    lam: np.ndarray,
    llr_t: np.ndarray,
    llr_t1: np.ndarray,
    packing: Radix4Packing,
    policy: PrecisionPolicy,
    counter: TileOpCounter | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Two trellis stages through the tiles.

    Returns (new metrics, 2-bit survivors holding the winning left local state).
    """
    f = lam.shape[0]
    s = packing.spec.num_states
    llr2 = round_to_half(np.concatenate([llr_t, llr_t1], axis=1)).astype(np.float32)
    lam_new = np.empty((f, s), dtype=_metric_dtype(policy))
    surv = np.empty((f, s), dtype=np.uint8)
    for tile in packing.tiles:
        bt = np.zeros((f, TILE, TILE), dtype=np.float32)
        bt[:, tile.b_rows, tile.b_cols] = llr2[:, tile.b_sel]
        ct = lam[:, tile.c_state] * tile.c_mask
        d = mma_16x16(tile.a, bt, ct, policy, counter)
        cand = d[:, tile.cand_rows, tile.cand_cols[:, None]]  # (F, n_out, 4)
        # shared tie rule: later candidate wins on equality
        k = cand.shape[-1] - 1 - np.argmax(cand[..., ::-1], axis=-1)
        best = np.take_along_axis(cand, k[..., None], axis=-1)[..., 0]
        lam_new[:, tile.out_states] = best
        surv[:, tile.out_states] = tile.perm_tab[np.arange(len(tile.out_states)), k]
    return lam_new, surv


# ---------------------------------------------------------------------------
# full decode
# ---------------------------------------------------------------------------


def decode_matrix_batch(
    llrs: np.ndarray,
    spec: CodeSpec,
    config: DecoderConfig | None = None,
) -> MatrixDecodeResult:
    """Tile-backed decode of frames (F, B, N): forward via tile steps, then
    standard traceback (two stages per step on the radix-4 path)."""
    config = config or DecoderConfig()
    llrs = np.asarray(llrs, dtype=np.float32)
    if llrs.ndim != 3 or llrs.shape[1] != spec.outputs_per_bit:
        raise ValueError("LLR batch must have shape (F, B, N)")
    f, _, n = llrs.shape
    if config.policy.channel_input == "half":
        llrs = round_to_half(llrs).astype(np.float32)

    counter = TileOpCounter()
    lam = np.zeros((f, spec.num_states), dtype=_metric_dtype(config.policy))
    offset = np.zeros(f, dtype=np.float64)
    steps: list[tuple[str, int, np.ndarray]] = []  # (kind, stage, survivors)

    pack2 = pack_radix2(spec) if (config.radix == 2 or n % 2 == 1) else None
    pack4 = pack_radix4(spec, config.optimized) if config.radix == 4 else None

    t = 0
    while t < n:
        if config.radix == 4 and t + 1 < n:
            lam, surv = forward_step_radix4(
                lam, llrs[:, :, t], llrs[:, :, t + 1], pack4, config.policy, counter
            )
            steps.append(("r4", t, surv))
            t += 2
        else:
            lam, surv = forward_step_radix2(lam, llrs[:, :, t], pack2, config.policy, counter)
            steps.append(("r2", t, surv))
            t += 1
        counter.survivor_write_passes += 1
        if config.renormalize:
            top = lam.max(axis=1)
            offset += top.astype(np.float64)
            lam = (lam - top[:, None]).astype(lam.dtype)
    counter.stages = n

    final_metric = lam.max(axis=1).astype(np.float64) + offset
    bits = _traceback_steps(lam, steps, spec)
    return MatrixDecodeResult(bits=bits, final_metric=final_metric, counter=counter)


def _traceback_steps(lam, steps, spec: CodeSpec) -> np.ndarray:
    f = lam.shape[0]
    n = steps[-1][1] + (2 if steps[-1][0] == "r4" else 1)
    k = spec.constraint_length
    mask2 = spec.num_butterflies - 1
    shift2 = k - 2
    mask4 = (1 << (k - 3)) - 1
    shift4 = k - 3
    rows = np.arange(f)
    j = np.argmax(lam, axis=1)
    out = np.empty((f, n), dtype=np.uint8)
    for kind, t, surv in reversed(steps):
        if kind == "r2":
            out[:, t] = j >> shift2
            j = 2 * (j & mask2) + surv[rows, j]
        else:
            y = j >> shift4
            out[:, t + 1] = y >> 1
            out[:, t] = y & 1
            j = 4 * (j & mask4) + surv[rows, j]
    return out


def decode_matrix(
    frame,
    spec: CodeSpec,
    config: DecoderConfig | None = None,
) -> MatrixDecodeResult:
    """Single-frame convenience wrapper around `decode_matrix_batch`."""
    llr = getattr(frame, "llr", frame)
    res = decode_matrix_batch(np.asarray(llr)[None, :, :], spec, config)
    return MatrixDecodeResult(
        bits=res.bits[0], final_metric=float(res.final_metric[0]), counter=res.counter
    )


# ---------------------------------------------------------------------------
# debug dump
# ---------------------------------------------------------------------------


def tile_debug_dump(
    spec: CodeSpec,
    config: DecoderConfig,
    llr_stages: np.ndarray | None = None,
    lam: np.ndarray | None = None,
) -> dict:
    """JSON-able dump of the packed tiles (A/B/C/D) for one forward step."""
    config = config or DecoderConfig()
    b = spec.outputs_per_bit
    width = b if config.radix == 2 else 2 * b
    if llr_stages is None:
        llr_stages = np.ones((1, width), dtype=np.float32)
    else:
        llr_stages = np.asarray(llr_stages, dtype=np.float32).reshape(1, width)
    if lam is None:
        lam = np.zeros((1, spec.num_states), dtype=np.float32)
    else:
        lam = np.asarray(lam, dtype=np.float32).reshape(1, spec.num_states)

    dump: dict = {"radix": config.radix, "optimized": config.optimized, "tiles": []}
    if config.radix == 2:
        packing = pack_radix2(spec)
        column_key = "butterfly"
        tiles = packing.tiles
    else:
        packing = pack_radix4(spec, config.optimized)
        column_key = "dragonfly"
        tiles = packing.tiles
        dump["optimization_effective"] = packing.optimization_effective

    for tile in tiles:
        bt = np.zeros((1, TILE, TILE), dtype=np.float32)
        bt[:, tile.b_rows, tile.b_cols] = llr_stages[:, tile.b_sel]
        ct = lam[:, tile.c_state] * tile.c_mask
        d = mma_16x16(tile.a, bt, ct, config.policy)
        entry = {
            "A": tile.a.astype(float).tolist(),
            "B": bt[0].astype(float).tolist(),
            "C": ct[0].astype(float).tolist(),
            "D": d[0].astype(float).tolist(),
            "columns": [
                {
                    "column": int(col[0]),
                    column_key: int(col[1]),
                    **({"permutation": list(map(int, col[2]))} if len(col) > 2 else {}),
                }
                for col in tile.columns
            ],
        }
        dump["tiles"].append(entry)
    return dump
