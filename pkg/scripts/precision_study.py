#!/usr/bin/env python3
"""Effect of accumulator and channel-input precision on the tile decoder.

Runs paired simulations (identical bits and noise) at one operating point
for each precision combination and prints the error counts side by side.
"""
import argparse

from vitertile.channel import run_point
from vitertile.codes import default_spec
from vitertile.matrix import DecoderConfig
from vitertile.tile import PrecisionPolicy


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ebn0", type=float, default=3.0)
    ap.add_argument("--bits", type=int, default=1_000_000)
    ap.add_argument("--radix", type=int, default=2, choices=(2, 4))
    ap.add_argument("--frame-len", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = default_spec()
    combos = [
        (acc, chan)
        for acc in ("single", "half")
        for chan in ("single", "half")
    ]
    print(f"Eb/N0 = {args.ebn0} dB, {args.bits} bits, radix {args.radix}, "
          f"frame length {args.frame_len}")
    print(f"{'accumulator':12s} {'channel in':12s} {'errors':>8s} {'ber':>10s}")
    for acc, chan in combos:
        config = DecoderConfig(
            radix=args.radix,
            optimized=args.radix == 4,
            policy=PrecisionPolicy(accumulator=acc, channel_input=chan),
        )
        point = run_point(
            spec, args.ebn0, args.bits,
            decoder="matrix", config=config,
            seed=args.seed, frame_len=args.frame_len,
        )
        print(f"{acc:12s} {chan:12s} {point.errors:8d} {point.ber:10.3g}")


if __name__ == "__main__":
    main()
