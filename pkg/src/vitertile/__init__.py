"""Convolutional coding toolkit: trellis structure, a scalar reference Viterbi
decoder, tile-packed (16x16 multiply-accumulate) decoders with radix-2/radix-4
packings, overlapping-frame scheduling, and an AWGN BER harness."""

from .codes import CodeSpec, default_spec, encode
from .matrix import DecoderConfig, decode_matrix, decode_matrix_batch
from .reference import SoftFrame, decode_reference
from .tile import PrecisionPolicy

__all__ = [
    "CodeSpec",
    "DecoderConfig",
    "PrecisionPolicy",
    "SoftFrame",
    "decode_matrix",
    "decode_matrix_batch",
    "decode_reference",
    "default_spec",
    "encode",
]

__version__ = "0.1.0"
