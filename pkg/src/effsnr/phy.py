"""Bit-level packet simulator used as ground truth for the link model.

A packet is encoded, randomly interleaved across every coded-bit slot,
Gray-mapped onto square QAM, sent through independent scalar AWGN
subchannels (one per tone and stream, at the post-equalizer SNR),
soft-demodulated with max-log LLRs and Viterbi decoded.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._kernels import awgn_llr
from .coding import _SIGNS, N_TAIL, _viterbi, conv_encode, depuncture
from .csi import CsiMeasurement
from .mcs import McsEntry
from .model import Config, RxConfig, TxConfig, config_snrs, selection_key

MAX_PAYLOAD_BYTES = 65000


@dataclass(frozen=True)
class PacketSimOutcome:
    delivered: bool
    pre_decode_bit_errors: int
    post_decode_bit_errors: int
    payload_bits: int


def _axis_levels(bits: int) -> tuple[np.ndarray, np.ndarray]:
    """Ascending PAM levels and their Gray labels (as bit arrays, MSB first)."""
    n = 1 << bits
    levels = np.arange(-(n - 1), n, 2, dtype=float)
    gray = np.arange(n) ^ (np.arange(n) >> 1)
    labels = (gray[:, None] >> np.arange(bits - 1, -1, -1)[None, :]) & 1
    return levels, labels


@dataclass(frozen=True)
class Constellation:
    """Square Gray-labelled constellation at unit average energy.

    BPSK uses the real axis only; the others split ``k`` bits evenly between
    the in-phase (first half) and quadrature (second half) axes.
    """

    k: int
    axis_bits: int
    levels: np.ndarray
    labels: np.ndarray
    scale: float

    @classmethod
    def for_bits(cls, k: int) -> "Constellation":
        if k not in (1, 2, 4, 6):
            raise ValueError(f"unsupported bits per symbol {k}")
        axis_bits = 1 if k == 1 else k // 2
        levels, labels = _axis_levels(axis_bits)
        energy = np.mean(levels ** 2) * (1 if k == 1 else 2)
        return cls(k, axis_bits, levels, labels, 1.0 / np.sqrt(energy))

    def _axis_index(self, bits: np.ndarray) -> np.ndarray:
        # bits (..., axis_bits) -> level index via inverse Gray
        g = np.zeros(bits.shape[:-1], dtype=np.int64)
        for j in range(self.axis_bits):
            g = (g << 1) | bits[..., j]
        idx = g.copy()
        shift = g >> 1
        while np.any(shift):
            idx ^= shift
            shift >>= 1
        return idx

    def modulate(self, bits: np.ndarray) -> np.ndarray:
        b = np.asarray(bits, dtype=np.int64).reshape(-1, self.k)
        re = self.levels[self._axis_index(b[:, : self.axis_bits])]
        if self.k == 1:
            return re * self.scale + 0j
        im = self.levels[self._axis_index(b[:, self.axis_bits:])]
        return (re + 1j * im) * self.scale

    def _axis_llr(self, y: np.ndarray, n0: np.ndarray) -> np.ndarray:
        pts = self.levels * self.scale
        d2 = (y[:, None] - pts[None, :]) ** 2
        out = np.empty((y.size, self.axis_bits))
        for j in range(self.axis_bits):
            one = self.labels[:, j] == 1
            out[:, j] = d2[:, one].min(axis=1) - d2[:, ~one].min(axis=1)
        return out / n0[:, None]

    def demodulate(self, y: np.ndarray, n0: np.ndarray) -> np.ndarray:
        """Max-log LLRs (positive favours 0), flattened in transmit bit order."""
        llr_re = self._axis_llr(y.real, n0)
        if self.k == 1:
            return llr_re.reshape(-1)
        return np.concatenate([llr_re, self._axis_llr(y.imag, n0)], axis=1).reshape(-1)


_CONSTELLATIONS = {k: Constellation.for_bits(k) for k in (1, 2, 4, 6)}


def constellation(k: int) -> Constellation:
    try:
        return _CONSTELLATIONS[k]
    except KeyError:
        raise ValueError(f"unsupported bits per symbol {k}") from None


def simulate_snr_grid(snrs: np.ndarray, mcs: McsEntry, payload_bytes: int,
                      rng: np.random.Generator) -> PacketSimOutcome:
    """Send one packet over subchannels with linear SNRs ``snrs`` (tones x streams)."""
    if not 1 <= payload_bytes <= MAX_PAYLOAD_BYTES:
        raise ValueError(f"payload must be 1..{MAX_PAYLOAD_BYTES} bytes; segment larger data")
    grid = np.asarray(snrs, dtype=float).reshape(-1)
    k = mcs.bits_per_symbol
    const = constellation(k)
    n_bits = 8 * payload_bytes

    payload = rng.integers(0, 2, n_bits, dtype=np.uint8)
    coded = conv_encode(payload, mcs.code_rate)
    per_symbol = grid.size * k
    n_ofdm = -(-coded.size // per_symbol)
    padded = np.concatenate([coded, rng.integers(0, 2, n_ofdm * per_symbol - coded.size,
                                                 dtype=np.uint8)])
    perm = rng.permutation(padded.size)
    tx_bits = padded[perm]

    noise = rng.standard_normal((tx_bits.size // k, 2))
    llr = awgn_llr(tx_bits, k, const.axis_bits, const.levels * const.scale,
                   const.labels, grid, noise)

    soft = np.empty(padded.size)
    soft[perm] = llr
    soft = soft[: coded.size]
    pre_errors = int(np.count_nonzero((soft < 0) != (coded == 1)))

    n_mother = 2 * (n_bits + N_TAIL)
    decoded = _viterbi(depuncture(soft, mcs.code_rate, n_mother), _SIGNS,
                       n_bits + N_TAIL)[:n_bits]
    post_errors = int(np.count_nonzero(decoded != payload))
    return PacketSimOutcome(post_errors == 0, pre_errors, post_errors, n_bits)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_packet(csi: CsiMeasurement, tx: TxConfig, rx: RxConfig, payload_bytes: int = 1500,
                    rng_seed=0) -> PacketSimOutcome:
    """One packet through the coded PHY at the configuration's subchannel SNRs."""
    return simulate_snr_grid(config_snrs(csi, tx, rx), tx.mcs, payload_bytes, _rng(rng_seed))


def packet_seeds(seed, n: int) -> list[np.random.SeedSequence]:
    """Independent per-packet seeds derived from ``seed``."""
    return np.random.SeedSequence(seed).spawn(n)


def prr_from_snrs(snrs: np.ndarray, mcs: McsEntry, n_packets: int, payload_bytes: int = 1500,
                  seed=0) -> float:
    if n_packets < 1:
        raise ValueError("n_packets must be >= 1")
    hits = sum(simulate_snr_grid(snrs, mcs, payload_bytes, np.random.default_rng(s)).delivered
               for s in packet_seeds(seed, n_packets))
    return hits / n_packets


def measure_prr(csi: CsiMeasurement, tx: TxConfig, rx: RxConfig, n_packets: int,
                payload_bytes: int = 1500, seed=0) -> float:
    """Fraction of ``n_packets`` independently seeded packets delivered."""
    return prr_from_snrs(config_snrs(csi, tx, rx), tx.mcs, n_packets, payload_bytes, seed)


@dataclass(frozen=True)
class OracleChoice:
    tx: TxConfig
    rx: RxConfig
    prr: float

    @property
    def rate_mbps(self) -> float:
        return self.tx.mcs.rate_mbps


def optimal_rate(csi: CsiMeasurement, space: Sequence[Config], prr_floor: float = 0.9,
                 n_packets: int = 20, payload_bytes: int = 1500,
                 seed=0) -> Optional[OracleChoice]:
    """Fastest configuration whose measured PRR reaches ``prr_floor``.

    Configurations are tried fastest-first (ties as in prediction), so the
    first success is the answer.
    """
    order = sorted(range(len(space)), key=lambda i: selection_key(space[i][0], i))
    for i in order:
        tx, rx = space[i]
        prr = measure_prr(csi, tx, rx, n_packets, payload_bytes, seed)
        if prr >= prr_floor:
            return OracleChoice(tx, rx, prr)
    return None
