"""Rate-1/2 K=7 convolutional code (generators 133, 171 octal) with puncturing.

Soft values follow the LLR convention: positive means the coded bit is more
likely 0, zero is an erasure.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numba import njit

from ._kernels import conv_encode_mother

CONSTRAINT_LENGTH = 7
GENERATORS = (0o133, 0o171)
N_TAIL = CONSTRAINT_LENGTH - 1
_N_STATES = 1 << N_TAIL
_HALF = _N_STATES // 2

# retention masks over the interleaved mother-code stream A0 B0 A1 B1 ...
PUNCTURE_PATTERNS = {
    Fraction(1, 2): (1, 1),
    Fraction(2, 3): (1, 1, 1, 0),
    Fraction(3, 4): (1, 1, 1, 0, 0, 1),
    Fraction(5, 6): (1, 1, 1, 0, 0, 1, 1, 0, 0, 1),
}


@dataclass(frozen=True)
class CodeSpec:
    code_rate: Fraction = Fraction(1, 2)
    constraint_length: int = CONSTRAINT_LENGTH
    generators: tuple[int, int] = GENERATORS

    def __post_init__(self):
        object.__setattr__(self, "code_rate", Fraction(self.code_rate))
        if self.code_rate not in PUNCTURE_PATTERNS:
            raise ValueError(f"unsupported code rate {self.code_rate}")
        if self.constraint_length != CONSTRAINT_LENGTH or tuple(self.generators) != GENERATORS:
            raise ValueError("only the K=7 (133, 171) code is implemented")

    @property
    def puncture_pattern(self) -> tuple[int, ...]:
        return PUNCTURE_PATTERNS[self.code_rate]

    def coded_length(self, n_bits: int) -> int:
        return punctured_length(2 * (n_bits + N_TAIL), self.code_rate)


def generator_taps(g: int) -> np.ndarray:
    """Tap weights for delays 0..K-1 (MSB of the octal word is delay 0)."""
    return np.array([(g >> (CONSTRAINT_LENGTH - 1 - d)) & 1 for d in range(CONSTRAINT_LENGTH)],
                    dtype=np.uint8)


_TAPS_A = generator_taps(GENERATORS[0])
_TAPS_B = generator_taps(GENERATORS[1])


def _pattern(code_rate) -> np.ndarray:
    try:
        return np.array(PUNCTURE_PATTERNS[Fraction(code_rate)], dtype=bool)
    except KeyError:
        raise ValueError(f"unsupported code rate {code_rate}") from None


def punctured_length(n_mother: int, code_rate) -> int:
    pat = _pattern(code_rate)
    full, rest = divmod(n_mother, len(pat))
    return int(full * pat.sum() + pat[:rest].sum())


@lru_cache(maxsize=128)
def _keep_mask(n_mother: int, code_rate) -> np.ndarray:
    pat = _pattern(code_rate)
    mask = np.tile(pat, -(-n_mother // len(pat)))[:n_mother]
    mask.setflags(write=False)
    return mask


def puncture(coded: np.ndarray, code_rate) -> np.ndarray:
    coded = np.asarray(coded)
    return coded[_keep_mask(coded.size, code_rate)]


def depuncture(values: np.ndarray, code_rate, n_mother: int) -> np.ndarray:
    """Re-insert erasures (0.0) at the punctured positions of a mother stream."""
    keep = _keep_mask(n_mother, code_rate)
    values = np.asarray(values, dtype=float)
    if values.size != keep.sum():
        raise ValueError(f"expected {int(keep.sum())} values for {n_mother} mother bits, "
                         f"got {values.size}")
    out = np.zeros(n_mother)
    out[keep] = values
    return out


def conv_encode(bits, code_rate=Fraction(1, 2)) -> np.ndarray:
    """Encode ``bits`` with 6 zero tail bits, then puncture."""
    u = np.concatenate([np.asarray(bits, dtype=np.uint8).reshape(-1),
                        np.zeros(N_TAIL, dtype=np.uint8)])
    return puncture(conv_encode_mother(u, _TAPS_A, _TAPS_B), code_rate)


def _trellis() -> tuple[np.ndarray, np.ndarray]:
    """Output bits for (state, input); state holds the last 6 inputs, newest at bit 5."""
    outs = np.zeros((_N_STATES, 2, 2), dtype=np.int8)
    for s in range(_N_STATES):
        for b in (0, 1):
            reg = (b << N_TAIL) | s  # bit 6 = current input, bit 0 = oldest
            for i, g in enumerate(GENERATORS):
                # generator MSB multiplies the current input
                outs[s, b, i] = bin(reg & g).count("1") & 1
    return outs, np.array([(b << (N_TAIL - 1)) | (s >> 1)
                           for s in range(_N_STATES) for b in (0, 1)]).reshape(_N_STATES, 2)


_OUTS, _NEXT = _trellis()


def _butterfly_signs(outs: np.ndarray) -> np.ndarray:
    """Branch-metric signs for input 0 out of states 2j (row 0/1) and 2j+1 (row 2/3).

    Rows hold +1 where generator A (rows 0, 2) or B (rows 1, 3) emits 0. Both
    generators tap the current input, so input 1 emits the complement and
    its metric is the negation.
    """
    half = _N_STATES // 2
    signs = np.empty((4, half))
    for j in range(half):
        for lsb in (0, 1):
            for g in (0, 1):
                signs[2 * lsb + g, j] = 1.0 - 2.0 * outs[2 * j + lsb, 0, g]
    return signs


@njit(cache=True)
def _viterbi(llr, signs, n_steps):
    half = _HALF  # compile-time trip count lets the ACS loop vectorize
    metric = np.full(2 * half, -1e300)
    metric[0] = 0.0
    new = np.empty(2 * half)
    even = np.empty(half)
    odd = np.empty(half)
    sa0 = signs[0].copy()
    sb0 = signs[1].copy()
    sa1 = signs[2].copy()
    sb1 = signs[3].copy()
    # decisions[t, ns] = LSB of the surviving predecessor of state ns
    decisions = np.empty((n_steps, 2 * half), dtype=np.uint8)
    for t in range(n_steps):
        la = llr[2 * t]
        lb = llr[2 * t + 1]
        for j in range(half):
            even[j] = metric[2 * j]
            odd[j] = metric[2 * j + 1]
        # branch-free add-compare-select over butterflies (vectorizes)
        for j in range(half):
            x0 = sa0[j] * la + sb0[j] * lb
            x1 = sa1[j] * la + sb1[j] * lb
            p = even[j] + x0
            q = odd[j] + x1
            new[j] = max(p, q)
            decisions[t, j] = q > p
            p = even[j] - x0
            q = odd[j] - x1
            new[j + half] = max(p, q)
            decisions[t, j + half] = q > p
        # metrics grow at most linearly in |llr|, so no renormalization is needed
        metric, new = new, metric
    out = np.empty(n_steps, dtype=np.uint8)
    state = 0  # zero-terminated
    for t in range(n_steps - 1, -1, -1):
        out[t] = state >> 5
        state = ((state << 1) & 63) | decisions[t, state]
    return out


_SIGNS = _butterfly_signs(_OUTS)


def viterbi_decode(soft, code_rate=Fraction(1, 2), n_bits=None) -> np.ndarray:
    """Maximum-likelihood decode of punctured soft values.

    ``n_bits`` (payload length) is inferred from the input length when omitted.
    Returns the payload without the tail.
    """
    soft = np.asarray(soft, dtype=float).reshape(-1)
    if n_bits is None:
        n_bits = _infer_payload_length(soft.size, code_rate)
    n_mother = 2 * (n_bits + N_TAIL)
    llr = depuncture(soft, code_rate, n_mother)
    decoded = _viterbi(llr, _SIGNS, n_bits + N_TAIL)
    return decoded[:n_bits]


def _infer_payload_length(n_coded: int, code_rate) -> int:
    pat = _pattern(code_rate)
    # punctured length grows monotonically with n_bits, so search near n_coded*rate
    guess = max(int(n_coded * Fraction(code_rate)) - N_TAIL - 2, 0)
    for n in range(max(guess - 4, 0), guess + 8):
        if punctured_length(2 * (n + N_TAIL), code_rate) == n_coded:
            return n
    raise ValueError(f"{n_coded} soft values do not form a {Fraction(code_rate)} frame "
                     f"(pattern length {len(pat)})")
