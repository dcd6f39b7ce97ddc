"""AWGN/BPSK verification harness: bit source, channel, BER counting, sweeps.

All randomness comes from counter-based Philox streams keyed by (seed, point,
purpose), so runs with the same seed are exactly paired across decoder
configurations and are independent of scheduling.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .codes import CodeSpec, encode_batch
from .matrix import DecoderConfig, decode_matrix_batch
from .reference import decode_batch
from .tile import round_to_half

__all__ = [
    "ChannelModel",
    "BerPoint",
    "generate_bits",
    "modulate_awgn",
    "compute_ber",
    "ber_sweep",
    "write_ber_csv",
    "write_gnuplot_script",
]

SIGMA_CONVENTIONS = ("standard", "shorthand")


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), *map(int, stream)))))


@dataclass(frozen=True)
class ChannelModel:
    """BPSK over AWGN at a given Eb/N0 (dB)."""

    ebn0_db: float
    convention: str = "standard"
    seed: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.ebn0_db):
            raise ValueError("Eb/N0 must be finite")
        if self.convention not in SIGMA_CONVENTIONS:
            raise ValueError(f"unknown sigma convention {self.convention!r}")

    def sigma(self, rate: float) -> float:
        """Noise standard deviation. `standard` assumes unit-energy BPSK with
        the code-rate Eb adjustment; `shorthand` is the bare 2^(-x/20) rule."""
        if self.convention == "shorthand":
            return 2.0 ** (-self.ebn0_db / 20.0)
        return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (self.ebn0_db / 10.0)))


@dataclass(frozen=True)
class BerPoint:
    ebn0_db: float
    n: int
    errors: int
    ber: float
    valid: bool


def generate_bits(n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Reproducible uniform bits."""
    if n < 1:
        raise ValueError("need at least one bit")
    return _rng(seed, stream, 0).integers(0, 2, size=n, dtype=np.uint8)


def modulate_awgn(
    coded_bits: np.ndarray,
    channel: ChannelModel,
    rate: float,
    stream: int = 0,
) -> np.ndarray:
    """BPSK-map coded bits (0 -> +1, 1 -> -1) and add Gaussian noise."""
    bits = np.asarray(coded_bits)
    sigma = channel.sigma(rate)
    symbols = 1.0 - 2.0 * bits.astype(np.float64)
    noise = _rng(channel.seed, stream, 1).normal(0.0, 1.0, size=bits.shape) * sigma
    return symbols + noise


def compute_ber(reference_bits: np.ndarray, decoded_bits: np.ndarray, ebn0_db: float = math.nan) -> BerPoint:
    """Error count and rate; a point is valid only when ber > 100/n."""
    ref = np.asarray(reference_bits).reshape(-1)
    dec = np.asarray(decoded_bits).reshape(-1)
    if ref.shape != dec.shape:
        raise ValueError("bit vectors differ in length")
    n = int(ref.size)
    errors = int(np.count_nonzero(ref != dec))
    ber = errors / n
    return BerPoint(ebn0_db=ebn0_db, n=n, errors=errors, ber=ber, valid=ber > 100.0 / n)


def _decode_point(llrs: np.ndarray, spec: CodeSpec, decoder: str, config: DecoderConfig | None, mode: str) -> np.ndarray:
    if mode == "hard":
        llrs = np.where(llrs >= 0.0, 1.0, -1.0)
    if decoder == "reference":
        bits, _ = decode_batch(llrs, spec)
        return bits
    if decoder == "matrix":
        return decode_matrix_batch(llrs, spec, config).bits
    raise ValueError(f"unknown decoder {decoder!r}")


def run_point(
    spec: CodeSpec,
    ebn0_db: float,
    bits_per_point: int,
    decoder: str = "reference",
    config: DecoderConfig | None = None,
    mode: str = "soft",
    convention: str = "standard",
    seed: int = 0,
    frame_len: int = 1024,
    point_index: int = 0,
) -> BerPoint:
    """Simulate one Eb/N0 operating point end to end."""
    channel = ChannelModel(ebn0_db, convention, seed)
    rate = 1.0 / spec.outputs_per_bit
    frames = -(-bits_per_point // frame_len)
    data = generate_bits(frames * frame_len, seed, point_index).reshape(frames, frame_len)
    coded = encode_batch(data, spec)  # (F, N, B)
    llr = modulate_awgn(coded, channel, rate, point_index)
    llrs = np.transpose(llr, (0, 2, 1))  # (F, B, N)
    if config is not None and config.policy.channel_input == "half":
        llrs = round_to_half(llrs).astype(np.float64)
    decoded = _decode_point(llrs, spec, decoder, config, mode)
    return compute_ber(data, decoded, ebn0_db)


def ber_sweep(
    spec: CodeSpec,
    ebn0_list,
    bits_per_point: int,
    decoder: str = "reference",
    config: DecoderConfig | None = None,
    mode: str = "soft",
    convention: str = "standard",
    seed: int = 0,
    frame_len: int = 1024,
) -> list[BerPoint]:
    """One BER point per Eb/N0 value; point RNG streams are independent."""
    return [
        run_point(
            spec,
            float(ebn0),
            bits_per_point,
            decoder=decoder,
            config=config,
            mode=mode,
            convention=convention,
            seed=seed,
            frame_len=frame_len,
            point_index=idx,
        )
        for idx, ebn0 in enumerate(ebn0_list)
    ]


def write_ber_csv(points: list[BerPoint], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ebn0_db", "n", "errors", "ber", "valid"])
        for p in points:
            writer.writerow([p.ebn0_db, p.n, p.errors, f"{p.ber:.6g}", int(p.valid)])


def write_gnuplot_script(csv_path: str, out_path: str) -> None:
    script = (
        "set datafile separator ','\n"
        "set logscale y\n"
        "set xlabel 'Eb/N0 (dB)'\n"
        "set ylabel 'BER'\n"
        "set grid\n"
        f"plot '{csv_path}' skip 1 using 1:4 with linespoints title 'BER'\n"
    )
    with open(out_path, "w") as fh:
        fh.write(script)


def ebn0_at_ber(points: list[BerPoint], target_ber: float) -> float:
    """Eb/N0 where the curve crosses `target_ber`, log-linear interpolation."""
    pts = sorted((p for p in points if p.errors > 0), key=lambda p: p.ebn0_db)
    for lo, hi in zip(pts, pts[1:]):
        if lo.ber >= target_ber >= hi.ber:
            if lo.ber == hi.ber:
                return lo.ebn0_db
            frac = (math.log(lo.ber) - math.log(target_ber)) / (
                math.log(lo.ber) - math.log(hi.ber)
            )
            return lo.ebn0_db + frac * (hi.ebn0_db - lo.ebn0_db)
    raise ValueError(f"curve does not cross BER {target_ber}")
