"""Command-line front end: encode/decode files, BER sweeps, structure
inspection, and op-count benchmarks.

File formats:
  bit files   8-byte little-endian bit count, then the bits packed into
              32-bit little-endian words, LSB = earliest bit;
  LLR files   stage-major, polynomial-minor scalars, binary16 or binary32
              little-endian.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import channel, codes, framing, matrix, reference
from .tile import PrecisionPolicy

_DEF_K = 7
_DEF_POLYS = "171,133"


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def write_bit_file(bits: np.ndarray, path: str) -> None:
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    packed = np.packbits(bits, bitorder="little")
    pad = (-len(packed)) % 4
    if pad:
        packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
    with open(path, "wb") as fh:
        fh.write(int(bits.size).to_bytes(8, "little"))
        fh.write(packed.tobytes())


def read_bit_file(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated bit file")
    n = int.from_bytes(raw[:8], "little")
    body = np.frombuffer(raw[8:], dtype=np.uint8)
    bits = np.unpackbits(body, bitorder="little")
    if bits.size < n:
        raise ValueError(f"{path}: bit file shorter than its header count")
    return bits[:n]


def write_llr_file(llr_flat: np.ndarray, path: str, dtype: str) -> None:
    np_dtype = "<f2" if dtype == "half" else "<f4"
    np.asarray(llr_flat).astype(np_dtype).tofile(path)


def read_llr_file(path: str, dtype: str) -> np.ndarray:
    np_dtype = "<f2" if dtype == "half" else "<f4"
    return np.fromfile(path, dtype=np_dtype).astype(np.float64)


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=_DEF_K, help="constraint length")
    p.add_argument("--poly", default=_DEF_POLYS, help="octal generators, comma separated")
    p.add_argument("--rate-den", type=int, default=None, help="outputs per input bit (checked against --poly)")
    p.add_argument("--config", default=None, help="TOML config file; flags win")


def _add_decoder_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--radix", type=int, choices=(2, 4), default=None,
                   help="tile decoder radix; omit for the scalar reference decoder")
    p.add_argument("--optimized", action="store_true", help="dragonfly-group permutation packing (radix 4)")
    p.add_argument("--acc-precision", choices=("half", "single"), default="single")
    p.add_argument("--chan-precision", choices=("half", "single"), default="single")


def _spec_from_args(args) -> codes.CodeSpec:
    polys = [p.strip() for p in str(args.poly).split(",") if p.strip()]
    spec = codes.CodeSpec.from_octal(args.k, polys)
    if args.rate_den is not None and args.rate_den != spec.outputs_per_bit:
        raise SystemExit(f"--rate-den {args.rate_den} does not match {len(polys)} polynomials")
    return spec


def _decoder_from_args(args) -> tuple[str, matrix.DecoderConfig | None]:
    policy = PrecisionPolicy(accumulator=args.acc_precision, channel_input=args.chan_precision)
    if args.radix is None:
        return "reference", None
    return "matrix", matrix.DecoderConfig(radix=args.radix, optimized=args.optimized, policy=policy)


def _parse_ebn0(text: str) -> list[float]:
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(round((stop - start) / step)) + 1
        return [start + i * step for i in range(n)]
    return [float(x) for x in text.split(",")]


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_encode(args) -> int:
    spec = _spec_from_args(args)
    with open(args.infile, "rb") as fh:
        data = fh.read()
    if not data:
        raise SystemExit("input file is empty")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    coded = codes.encode(bits, spec)
    write_bit_file(coded, args.out)
    return 0


def _cmd_decode(args) -> int:
    spec = _spec_from_args(args)
    b = spec.outputs_per_bit
    if args.llr_in:
        flat = read_llr_file(args.llr_in, args.llr_dtype)
        if flat.size % b:
            raise SystemExit("LLR file length is not a multiple of the code rate denominator")
        llr = flat.reshape(-1, b).T
    else:
        coded = read_bit_file(args.infile)
        if coded.size % b:
            raise SystemExit("coded bit count is not a multiple of the code rate denominator")
        llr = (1.0 - 2.0 * coded.astype(np.float64)).reshape(-1, b).T

    decoder, config = _decoder_from_args(args)
    n = llr.shape[1]
    stats: dict = {"decoder": decoder if decoder == "reference" else f"radix{args.radix}" + ("-opt" if args.optimized else ""), "stages": n}
    if args.frame_len:
        plan = framing.plan_frames(n, args.frame_len, args.overlap)
        bits = framing.decode_stream(llr, spec, plan, decoder=decoder, config=config, workers=args.threads)
        stats["windows"] = len(plan.windows)
    elif decoder == "reference":
        bits, metric = reference.decode_batch(llr[None], spec)
        bits = bits[0]
        stats["final_metric"] = float(metric[0])
    else:
        res = matrix.decode_matrix(llr, spec, config)
        bits = res.bits
        stats.update(
            final_metric=float(res.final_metric),
            q=res.q,
            mma_ops=res.counter.mma_ops,
            survivor_write_passes=res.counter.survivor_write_passes,
        )

    if bits.size % 8:
        raise SystemExit("decoded bit count is not byte aligned; refusing to truncate")
    with open(args.out, "wb") as fh:
        fh.write(np.packbits(bits, bitorder="little").tobytes())
    if args.stats:
        with open(args.stats, "w") as fh:
            json.dump(stats, fh, indent=2)
    return 0


def _cmd_ber_sweep(args) -> int:
    spec = _spec_from_args(args)
    decoder, config = _decoder_from_args(args)
    points = channel.ber_sweep(
        spec,
        _parse_ebn0(args.ebn0),
        args.bits,
        decoder=decoder,
        config=config,
        mode=args.mode,
        convention=args.sigma_convention,
        seed=args.seed,
        frame_len=args.frame_len or 1024,
    )
    channel.write_ber_csv(points, args.out)
    if args.plot_script:
        channel.write_gnuplot_script(args.out, args.plot_script)
    for p in points:
        print(f"ebn0={p.ebn0_db:6.2f} dB  n={p.n}  errors={p.errors}  ber={p.ber:.3g}  valid={p.valid}")
    return 0


def _cmd_inspect(args) -> int:
    spec = _spec_from_args(args)
    if args.dump_tiles:
        decoder, config = _decoder_from_args(args)
        if decoder == "reference":
            raise SystemExit("--dump-tiles needs --radix 2 or 4")
        _emit(json.dumps(matrix.tile_debug_dump(spec, config), indent=2), args.out)
    elif args.bits:
        plan = framing.plan_frames(args.bits, args.frame_len or framing.DEFAULT_FRAME_LEN,
                                   args.overlap if args.overlap is not None else framing.DEFAULT_OVERLAP)
        _emit(plan.to_json(), args.out)
    elif args.rho:
        _emit(codes.dragonfly_json(spec, args.rho), args.out)
        groups = codes.find_dragonfly_groups(args.rho, spec)
        print(f"{len(groups)} dragonfly groups: sizes {[len(g.members) for g in groups]}", file=sys.stderr)
    elif args.format == "dot":
        _emit(codes.trellis_dot(spec), args.out)
    else:
        _emit(codes.trellis_json(spec), args.out)
    return 0


def _cmd_bench(args) -> int:
    spec = _spec_from_args(args)
    n = args.bits
    rng = np.random.default_rng(args.seed)
    llr = rng.normal(size=(1, spec.outputs_per_bit, n))
    report = {"disclaimer": "CPU emulation only; published GPU tensor-core throughput is out of scope here.",
              "stages": n, "configs": {}}
    configs: list[tuple[str, str, matrix.DecoderConfig | None]] = [
        ("reference", "reference", None),
        ("radix2", "matrix", matrix.DecoderConfig(radix=2)),
        ("radix4", "matrix", matrix.DecoderConfig(radix=4)),
        ("radix4-opt", "matrix", matrix.DecoderConfig(radix=4, optimized=True)),
    ]
    for name, kind, config in configs:
        t0 = time.perf_counter()
        if kind == "reference":
            reference.decode_batch(llr, spec)
            entry = {"stages_per_second": n / (time.perf_counter() - t0)}
        else:
            res = matrix.decode_matrix_batch(llr, spec, config)
            dt = time.perf_counter() - t0
            entry = {
                "stages_per_second": n / dt,
                "q_tile_ops_per_stage": res.q,
                "tile_ops_per_bit": res.counter.mma_ops / n,
                "survivor_write_passes_per_bit": res.counter.survivor_write_passes / n,
            }
        report["configs"][name] = entry
    text = json.dumps(report, indent=2)
    _emit(text, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vitertile", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a raw file into a coded bit file")
    _add_spec_args(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="decode a coded bit file or LLR file")
    _add_spec_args(p)
    _add_decoder_args(p)
    p.add_argument("--in", dest="infile", default=None, help="coded bit file (hard decisions)")
    p.add_argument("--llr-in", default=None, help="LLR file (soft decisions)")
    p.add_argument("--llr-dtype", choices=("half", "single"), default="single")
    p.add_argument("--frame-len", type=int, default=None, help="decode with overlapping frames")
    p.add_argument("--overlap", type=int, default=framing.DEFAULT_OVERLAP)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", default=None, help="write decode stats JSON here")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("ber-sweep", help="simulate BER over a range of Eb/N0")
    _add_spec_args(p)
    _add_decoder_args(p)
    p.add_argument("--ebn0", required=True, help="comma list or start:stop:step (dB)")
    p.add_argument("--bits", type=int, default=1_000_000, help="bits per point")
    p.add_argument("--mode", choices=("soft", "hard"), default="soft")
    p.add_argument("--sigma-convention", choices=channel.SIGMA_CONVENTIONS, default="standard")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frame-len", type=int, default=1024)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--plot-script", default=None, help="also emit a gnuplot script")
    p.set_defaults(func=_cmd_ber_sweep)

    p = sub.add_parser("inspect", help="dump trellis / dragonfly / plan / tile structure")
    _add_spec_args(p)
    _add_decoder_args(p)
    p.add_argument("--rho", type=int, default=None, help="dragonfly stage width")
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.add_argument("--bits", type=int, default=None, help="stream length for a frame plan dump")
    p.add_argument("--frame-len", type=int, default=None)
    p.add_argument("--overlap", type=int, default=None)
    p.add_argument("--dump-tiles", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("bench", help="stages/second and op counts per decoder config")
    _add_spec_args(p)
    p.add_argument("--bits", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    if sys.version_info >= (3, 11):
        import tomllib as toml
    else:
        import tomli as toml
    with open(path, "rb") as fh:
        data = toml.load(fh)
    defaults = {k.replace("-", "_"): v for k, v in data.items()}
    for action in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        action.set_defaults(**{k: v for k, v in defaults.items()
                               if any(a.dest == k for a in action._actions)})
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
