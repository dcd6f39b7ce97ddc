#!/usr/bin/env python3
"""BER curves for the reference and tile decoders, soft and hard decision.

Writes one CSV per configuration plus a gnuplot script; prints a summary
table with the Eb/N0 each curve needs for BER 1e-3.
"""
import argparse
import pathlib

from vitertile.channel import ber_sweep, ebn0_at_ber, write_ber_csv, write_gnuplot_script
from vitertile.codes import default_spec
from vitertile.matrix import DecoderConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bits", type=int, default=1_000_000, help="bits per point")
    ap.add_argument("--start", type=float, default=2.0)
    ap.add_argument("--stop", type=float, default=5.5)
    ap.add_argument("--step", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--outdir", default="ber_out")
    args = ap.parse_args()

    spec = default_spec()
    grid = []
    x = args.start
    while x <= args.stop + 1e-9:
        grid.append(round(x, 6))
        x += args.step

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    runs = [
        ("reference-soft", "reference", None, "soft"),
        ("reference-hard", "reference", None, "hard"),
        ("radix2-soft", "matrix", DecoderConfig(radix=2), "soft"),
        ("radix4opt-soft", "matrix", DecoderConfig(radix=4, optimized=True), "soft"),
    ]
    for name, decoder, config, mode in runs:
        points = ber_sweep(
            spec, grid, args.bits, decoder=decoder, config=config, mode=mode, seed=args.seed
        )
        csv_path = outdir / f"{name}.csv"
        write_ber_csv(points, str(csv_path))
        write_gnuplot_script(str(csv_path), str(outdir / f"{name}.gp"))
        try:
            at_1e3 = f"{ebn0_at_ber([p for p in points if p.valid], 1e-3):.2f} dB"
        except ValueError:
            at_1e3 = "not crossed"
        print(f"{name:16s}  Eb/N0 @ BER 1e-3: {at_1e3}")


if __name__ == "__main__":
    main()
