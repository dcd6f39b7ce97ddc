import numpy as np
import pytest

from vitertile.codes import CodeSpec, default_spec

# standard feedforward codes, one per constraint length (octal generators)
STANDARD_CODES = {
    3: ("7", "5"),
    4: ("17", "15"),
    5: ("23", "35"),
    6: ("53", "75"),
    7: ("171", "133"),
    8: ("247", "371"),
    9: ("561", "753"),
}


def spec_for_k(k: int) -> CodeSpec:
    return CodeSpec.from_octal(k, STANDARD_CODES[k])


@pytest.fixture
def spec171() -> CodeSpec:
    return default_spec()


def oracle_encode(bits, spec: CodeSpec) -> list:
    """Independent direct-convolution encoder: per stage, per polynomial,
    XOR the generator taps over (in_t, ..., in_{t-K+1})."""
    k = spec.constraint_length
    out = []
    for t in range(len(bits)):
        for g in spec.generators:
            acc = 0
            for d in range(k):
                tap = (g >> (k - 1 - d)) & 1
                past = bits[t - d] if t - d >= 0 else 0
                acc ^= tap & past
            out.append(acc)
    return out


def oracle_best_metric(llr, spec: CodeSpec) -> float:
    """Exhaustive maximum-likelihood metric over all input sequences and all
    initial register contents (matching all-zero initial path metrics)."""
    k = spec.constraint_length
    b = spec.outputs_per_bit
    llr = np.asarray(llr, dtype=np.float64)
    n = llr.shape[1]
    m = n + k - 1
    seqs = (np.arange(1 << m, dtype=np.uint64)[:, None] >> np.arange(m, dtype=np.uint64)) & 1
    seqs = seqs.astype(np.uint8)  # column d holds bit d; earliest history first
    metric = np.zeros(1 << m, dtype=np.float64)
    for t in range(n):
        window = seqs[:, t : t + k]  # in_{t-K+1} .. in_t as register history
        for bb in range(b):
            g = spec.generators[bb]
            taps = np.array([(g >> (k - 1 - d)) & 1 for d in range(k)], dtype=np.uint8)
            coded = (window @ taps[::-1]) & 1
            metric += (1.0 - 2.0 * coded) * llr[bb, t]
    return float(metric.max())
