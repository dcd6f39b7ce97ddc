"""Convolutional code structure: encoder, trellis geometry, butterflies and dragonflies.

State convention: the state holds the previous K-1 input bits with the most
recent bit in the MSB position, so feeding bit u to state i gives
j = u * 2^(K-2) + floor(i / 2).  Generator bit K-1 taps the current input bit,
bit 0 taps the oldest bit still in the register.
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

__all__ = [
    "CodeSpec",
    "TrellisBranch",
    "Butterfly",
    "Dragonfly",
    "SuperBranchParts",
    "DragonflyGroup",
    "encode",
    "branch_output",
    "butterfly_geometry",
    "butterfly",
    "all_branches",
    "extract_bits",
    "dragonfly_state_index",
    "dragonfly_local_step",
    "super_branch_inputs",
    "super_branch_output",
    "decompose_generator",
    "branch_output_via_parts",
    "compute_bomat",
    "identical_bomat_classes",
    "find_dragonfly_groups",
    "trellis_json",
    "trellis_dot",
    "dragonfly_json",
]


@dataclass(frozen=True)
class CodeSpec:
    """A feedforward convolutional code: constraint length plus generators."""

    constraint_length: int
    generators: tuple[int, ...]

    def __post_init__(self) -> None:
        k = self.constraint_length
        if k < 3:
            raise ValueError(f"constraint length must be >= 3, got {k}")
        gens = tuple(int(g) for g in self.generators)
        if len(gens) < 2:
            raise ValueError("need at least 2 generator polynomials")
        for g in gens:
            if not 0 <= g < (1 << k):
                raise ValueError(f"generator {g:#o} does not fit in {k} bits")
        object.__setattr__(self, "generators", gens)

    @property
    def outputs_per_bit(self) -> int:
        return len(self.generators)

    @property
    def num_states(self) -> int:
        return 1 << (self.constraint_length - 1)

    @property
    def num_butterflies(self) -> int:
        return 1 << (self.constraint_length - 2)

    def num_dragonflies(self, rho: int) -> int:
        self.check_radix_log(rho)
        return 1 << (self.constraint_length - rho - 1)

    def check_radix_log(self, rho: int) -> None:
        if not 1 <= rho <= self.constraint_length - 1:
            raise ValueError(
                f"stage width {rho} out of range for K={self.constraint_length}"
            )

    @property
    def octal_generators(self) -> tuple[str, ...]:
        return tuple(format(g, "o") for g in self.generators)

    @classmethod
    def from_octal(cls, constraint_length: int, polynomials: Sequence[int | str]) -> "CodeSpec":
        """Build from octal polynomial notation, e.g. (7, ["171", "133"])."""
        gens = tuple(int(str(p), 8) for p in polynomials)
        return cls(constraint_length, gens)

    @classmethod
    def from_config(cls, path: str) -> "CodeSpec":
        """Load from a small TOML config with keys `k` and `polynomials` (octal)."""
        with open(path, "rb") as fh:
            data = _toml.load(fh)
        return cls.from_octal(int(data["k"]), data["polynomials"])


@dataclass(frozen=True)
class TrellisBranch:
    from_state: int
    to_state: int
    branch_input: int
    branch_output: tuple[int, ...]


@dataclass(frozen=True)
class Butterfly:
    """The isolated 2-left / 2-right branch pattern between consecutive stages."""

    index: int
    left_states: tuple[int, int]
    right_states: tuple[int, int]
    # outputs keyed by (left local, right local)
    outputs: dict[tuple[int, int], tuple[int, ...]]


@dataclass(frozen=True)
class Dragonfly:
    """A radix-2^rho isolated subgraph spanning rho consecutive stages."""

    rho: int
    index: int
    spec: CodeSpec

    def state(self, y: int, x: int) -> int:
        return dragonfly_state_index(self.index, y, x, self.rho, self.spec)

    def states(self, x: int) -> tuple[int, ...]:
        return tuple(self.state(y, x) for y in range(1 << self.rho))

    def fluid_parts(self, y: int, x: int) -> tuple[int, int]:
        """(pre-bubble, post-bubble) fields of local state y at local stage x."""
        return extract_bits(y, self.rho, self.rho - x), extract_bits(y, self.rho - x, 0)


@dataclass(frozen=True)
class SuperBranchParts:
    """Generator polynomial split into input / pre-bubble / bubble / post-bubble taps."""

    input_taps: int
    pre_taps: int
    bubble_taps: int
    post_taps: int

    def recombined(self) -> int:
        return self.input_taps | self.pre_taps | self.bubble_taps | self.post_taps


@dataclass(frozen=True)
class DragonflyGroup:
    """Dragonflies whose output matrices are left-state permutations of each other.

    ``permutations[f]`` maps representative row positions to member left states:
    member_bomat[row(j, perm[i])] == representative_bomat[row(j, i)].
    """

    representative: int
    members: tuple[int, ...]
    permutations: dict[int, tuple[int, ...]]


# ---------------------------------------------------------------------------
# encoder and branch structure
# ---------------------------------------------------------------------------


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def branch_output(state: int, input_bit: int, spec: CodeSpec) -> tuple[int, tuple[int, ...]]:
    """Take one branch: returns (to_state, output bits)."""
    k = spec.constraint_length
    if not 0 <= state < spec.num_states:
        raise ValueError(f"state {state} out of range")
    if input_bit not in (0, 1):
        raise ValueError("input bit must be 0 or 1")
    register = (input_bit << (k - 1)) | state
    bits = tuple(_parity(g & register) for g in spec.generators)
    to_state = (input_bit << (k - 2)) | (state >> 1)
    return to_state, bits


def _generator_taps(spec: CodeSpec) -> np.ndarray:
    """Tap array taps[b, d] multiplying in_{t-d}; d=0 is the current input."""
    k = spec.constraint_length
    return np.array(
        [[(g >> (k - 1 - d)) & 1 for d in range(k)] for g in spec.generators],
        dtype=np.uint8,
    )


def encode(bits: Sequence[int] | np.ndarray, spec: CodeSpec) -> np.ndarray:
    """Encode input bits; output is stage-major, polynomial-minor, length N*B."""
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("input must be a non-empty 1-D bit sequence")
    if not np.all(arr <= 1):
        raise ValueError("input must contain only bits")
    coded = encode_batch(arr[None, :], spec)[0]
    return coded.reshape(-1)


def encode_batch(bits2d: np.ndarray, spec: CodeSpec) -> np.ndarray:
    """Encode frames (F, N) -> coded bits (F, N, B), zero initial state."""
    k = spec.constraint_length
    f, n = bits2d.shape
    padded = np.zeros((f, n + k - 1), dtype=np.uint8)
    padded[:, k - 1:] = bits2d
    taps = _generator_taps(spec)
    out = np.zeros((f, n, spec.outputs_per_bit), dtype=np.uint8)
    for b in range(spec.outputs_per_bit):
        acc = np.zeros((f, n), dtype=np.uint8)
        for d in range(k):
            if taps[b, d]:
                acc ^= padded[:, k - 1 - d : k - 1 - d + n]
        out[:, :, b] = acc
    return out


def all_branches(spec: CodeSpec) -> Iterator[TrellisBranch]:
    for i in range(spec.num_states):
        for u in (0, 1):
            j, bo = branch_output(i, u, spec)
            yield TrellisBranch(i, j, u, bo)


# ---------------------------------------------------------------------------
# butterflies
# ---------------------------------------------------------------------------


def butterfly_geometry(beta: int, spec: CodeSpec) -> tuple[int, int, int, int]:
    """Global state indices (i0, i1, j0, j1) of butterfly beta."""
    if not 0 <= beta < spec.num_butterflies:
        raise ValueError(f"butterfly index {beta} out of range")
    half = spec.num_butterflies
    return 2 * beta, 2 * beta + 1, beta, beta + half


def butterfly(beta: int, spec: CodeSpec) -> Butterfly:
    i0, i1, j0, j1 = butterfly_geometry(beta, spec)
    outputs: dict[tuple[int, int], tuple[int, ...]] = {}
    for li, i in enumerate((i0, i1)):
        for u in (0, 1):
            j, bo = branch_output(i, u, spec)
            lj = 0 if j == j0 else 1
            outputs[(li, lj)] = bo
    return Butterfly(beta, (i0, i1), (j0, j1), outputs)


# ---------------------------------------------------------------------------
# dragonflies
# ---------------------------------------------------------------------------


def extract_bits(x: int, b: int, a: int) -> int:
    """Bit field of x below index b and at or above index a: floor((x mod 2^b) / 2^a)."""
    if a > b:
        raise ValueError("low index exceeds high index")
    return (x % (1 << b)) >> a if b > 0 else 0


def dragonfly_state_index(f: int, y: int, x: int, rho: int, spec: CodeSpec) -> int:
    """Global state of local state y at local stage x of dragonfly f."""
    spec.check_radix_log(rho)
    k = spec.constraint_length
    if not 0 <= x <= rho:
        raise ValueError(f"local stage {x} out of range")
    if not 0 <= y < (1 << rho):
        raise ValueError(f"local state {y} out of range")
    if not 0 <= f < spec.num_dragonflies(rho):
        raise ValueError(f"dragonfly index {f} out of range")
    pre = extract_bits(y, rho, rho - x)
    post = extract_bits(y, rho - x, 0)
    return (pre << (k - x - 1)) + (f << (rho - x)) + post


def dragonfly_local_step(y: int, input_bit: int, rho: int) -> int:
    """Local state transition inside a dragonfly (a 2^rho-state trellis)."""
    return (input_bit << (rho - 1)) | (y >> 1)


def super_branch_inputs(right_local: int, rho: int) -> tuple[int, ...]:
    """Input bits along the unique path ending at a right local state, earliest first."""
    return tuple((right_local >> x) & 1 for x in range(rho))


def super_branch_output(
    f: int, left_local: int, right_local: int, rho: int, spec: CodeSpec
) -> tuple[int, ...]:
    """Concatenated outputs of the unique path left->right of dragonfly f."""
    state = dragonfly_state_index(f, left_local, 0, rho, spec)
    out: list[int] = []
    for u in super_branch_inputs(right_local, rho):
        state, bo = branch_output(state, u, spec)
        out.extend(bo)
    assert state == dragonfly_state_index(f, right_local, rho, rho, spec)
    return tuple(out)


def decompose_generator(g: int, x: int, rho: int, spec: CodeSpec) -> SuperBranchParts:
    """Split generator g into taps hitting input / pre-bubble / bubble / post-bubble
    for the branch leaving local stage x of a radix-2^rho dragonfly."""
    k = spec.constraint_length
    if not 0 <= x < rho:
        raise ValueError("branch stage out of range")
    input_mask = 1 << (k - 1)
    pre_mask = ((1 << x) - 1) << (k - 1 - x)
    bubble_mask = ((1 << (k - 1 - rho)) - 1) << (rho - x)
    post_mask = (1 << (rho - x)) - 1
    return SuperBranchParts(g & input_mask, g & pre_mask, g & bubble_mask, g & post_mask)


def branch_output_via_parts(
    f: int, y: int, input_bit: int, x: int, rho: int, spec: CodeSpec
) -> tuple[int, ...]:
    """Branch output computed from the generator partition; used to cross-check the
    XOR-mask relation between any branch and the main (all-zero local) branch."""
    k = spec.constraint_length
    pre, post = extract_bits(y, rho, rho - x), extract_bits(y, rho - x, 0)
    out = []
    for g in spec.generators:
        parts = decompose_generator(g, x, rho, spec)
        main = _parity(parts.bubble_taps & (f << (rho - x)))
        bit = main
        bit ^= _parity(parts.input_taps & (input_bit << (k - 1)))
        bit ^= _parity(parts.pre_taps & (pre << (k - 1 - x)))
        bit ^= _parity(parts.post_taps & post)
        out.append(bit)
    return tuple(out)


# ---------------------------------------------------------------------------
# branch output matrices and dragonfly groups
# ---------------------------------------------------------------------------


def compute_bomat(f: int, rho: int, spec: CodeSpec) -> np.ndarray:
    """+-1 matrix of super-branch outputs for dragonfly f.

    Rows are grouped into per-right-state blocks: row (j * 2^rho + i) is the
    super-branch from left local i to right local j; entries are (-1)^bit.
    For rho=1 this is the 4 x B butterfly matrix with rows
    (i0j0, i1j0, i0j1, i1j1).
    """
    n = 1 << rho
    rows = np.empty((n * n, rho * spec.outputs_per_bit), dtype=np.int8)
    for j in range(n):
        for i in range(n):
            bits = super_branch_output(f, i, j, rho, spec)
            rows[j * n + i] = [1 - 2 * b for b in bits]
    return rows


def _left_state_signatures(bomat: np.ndarray, rho: int) -> list[tuple]:
    """Signature of each left local state: its row in every right-state block."""
    n = 1 << rho
    return [tuple(tuple(int(v) for v in bomat[j * n + i]) for j in range(n)) for i in range(n)]


def identical_bomat_classes(rho: int, spec: CodeSpec) -> list[tuple[int, ...]]:
    """Partition dragonfly indices by exactly equal output matrices."""
    classes: dict[bytes, list[int]] = {}
    for f in range(spec.num_dragonflies(rho)):
        key = compute_bomat(f, rho, spec).tobytes()
        classes.setdefault(key, []).append(f)
    return [tuple(v) for v in classes.values()]


def find_dragonfly_groups(rho: int, spec: CodeSpec) -> list[DragonflyGroup]:
    """Partition dragonflies into maximal groups whose output matrices are
    left-state permutations of each other.

    Two matrices are equivalent iff the multisets of left-state signatures
    match; matching signatures yields the permutation directly.
    """
    sigs: dict[int, list[tuple]] = {}
    buckets: dict[tuple, list[int]] = {}
    for f in range(spec.num_dragonflies(rho)):
        s = _left_state_signatures(compute_bomat(f, rho, spec), rho)
        sigs[f] = s
        buckets.setdefault(tuple(sorted(s)), []).append(f)

    groups = []
    for members in buckets.values():
        rep = min(members)
        rep_sig = sigs[rep]
        perms: dict[int, tuple[int, ...]] = {}
        for f in members:
            remaining = list(range(len(rep_sig)))
            perm = []
            for want in rep_sig:
                pos = next(p for p in remaining if sigs[f][p] == want)
                remaining.remove(pos)
                perm.append(pos)
            perms[f] = tuple(perm)
        groups.append(DragonflyGroup(rep, tuple(sorted(members)), perms))
    groups.sort(key=lambda g: g.representative)
    return groups


# ---------------------------------------------------------------------------
# structure export
# ---------------------------------------------------------------------------


def trellis_json(spec: CodeSpec) -> str:
    data = {
        "k": spec.constraint_length,
        "b": spec.outputs_per_bit,
        "generators_octal": list(spec.octal_generators),
        "num_states": spec.num_states,
        "num_butterflies": spec.num_butterflies,
        "branches": [
            {
                "from": br.from_state,
                "to": br.to_state,
                "input": br.branch_input,
                "output": list(br.branch_output),
            }
            for br in all_branches(spec)
        ],
    }
    return json.dumps(data, indent=2)


def trellis_dot(spec: CodeSpec) -> str:
    lines = ["digraph trellis {", "  rankdir=LR;"]
    for br in all_branches(spec):
        label = f"{br.branch_input}/" + "".join(str(b) for b in br.branch_output)
        lines.append(f'  s{br.from_state} -> s{br.to_state} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines)


def dragonfly_json(spec: CodeSpec, rho: int) -> str:
    groups = find_dragonfly_groups(rho, spec)
    data = {
        "k": spec.constraint_length,
        "rho": rho,
        "num_dragonflies": spec.num_dragonflies(rho),
        "dragonflies": [
            {
                "index": f,
                "states_per_stage": [
                    list(Dragonfly(rho, f, spec).states(x)) for x in range(rho + 1)
                ],
                "bomat": compute_bomat(f, rho, spec).tolist(),
            }
            for f in range(spec.num_dragonflies(rho))
        ],
        "groups": [
            {
                "representative": g.representative,
                "members": list(g.members),
                "permutations": {str(f): list(p) for f, p in g.permutations.items()},
            }
            for g in groups
        ],
    }
    return json.dumps(data, indent=2)


@lru_cache(maxsize=None)
def default_spec() -> CodeSpec:
    """The widely used rate-1/2, K=7 code with octal generators (171, 133)."""
    return CodeSpec.from_octal(7, ("171", "133"))
