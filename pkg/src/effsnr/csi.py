"""CSI measurement and trace containers, Packet SNR, and CSI quantization."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

VALID_N_SUB = (56, 114)
DEFAULT_NOISE_DBM = -92.0


def packet_snr(rssi_dbm: Sequence[float], noise_dbm: float, agc_db: float = 0.0) -> float:
    """Link Packet SNR in dB: per-antenna SNRs summed in linear units."""
    rssi = np.asarray(rssi_dbm, dtype=float)
    if rssi.size == 0:
        raise ValueError("rssi_dbm must contain at least one antenna")
    per_antenna = 10.0 ** ((rssi - noise_dbm - agc_db) / 10.0)
    return float(10.0 * np.log10(per_antenna.sum()))


def rssi_from_matrices(matrices: np.ndarray, noise_dbm: float = DEFAULT_NOISE_DBM,
                       agc_db: float = 0.0) -> tuple[float, ...]:
    """Per-RX-antenna RSSI implied by noise-normalized CSI.

    Received power on antenna r is the tone-averaged sum over transmit
    antennas of ``|h|^2``; RSSI is that SNR re-referenced to ``noise_dbm``.
    """
    power = np.mean(np.sum(np.abs(matrices) ** 2, axis=2), axis=0)
    power = np.maximum(power, 1e-30)
    return tuple(float(x) for x in noise_dbm + agc_db + 10.0 * np.log10(power))


@dataclass(frozen=True, eq=False)
class CsiMeasurement:
    """One CSI record.

    ``matrices`` has shape ``(n_sub, n_rx, n_tx)``; entries are noise-normalized
    so ``|h|^2`` is the linear SNR contributed by that path on that tone.
    """

    matrices: np.ndarray
    rssi_dbm: tuple[float, ...]
    noise_dbm: float = DEFAULT_NOISE_DBM
    agc_db: float = 0.0
    timestamp_us: int = 0

    def __post_init__(self):
        m = np.array(self.matrices, dtype=np.complex128)
        if m.ndim != 3:
            raise ValueError(f"CSI must be (n_sub, n_rx, n_tx), got shape {m.shape}")
        if m.shape[0] not in VALID_N_SUB:
            raise ValueError(f"n_sub must be one of {VALID_N_SUB}, got {m.shape[0]}")
        if not np.all(np.isfinite(m)):
            raise ValueError("CSI contains non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)
        rssi = tuple(float(x) for x in self.rssi_dbm)
        if len(rssi) != m.shape[1]:
            raise ValueError(f"rssi_dbm has {len(rssi)} entries for {m.shape[1]} RX antennas")
        object.__setattr__(self, "rssi_dbm", rssi)
        object.__setattr__(self, "timestamp_us", int(self.timestamp_us))

    @classmethod
    def from_matrices(cls, matrices, noise_dbm: float = DEFAULT_NOISE_DBM,
                      agc_db: float = 0.0, timestamp_us: int = 0) -> "CsiMeasurement":
        """Build a record whose RSSI is derived from the matrices themselves."""
        m = np.asarray(matrices, dtype=np.complex128)
        return cls(m, rssi_from_matrices(m, noise_dbm, agc_db), noise_dbm, agc_db, timestamp_us)

    @property
    def n_sub(self) -> int:
        return self.matrices.shape[0]

    @property
    def n_rx(self) -> int:
        return self.matrices.shape[1]

    @property
    def n_tx(self) -> int:
        return self.matrices.shape[2]

    def packet_snr_db(self) -> float:
        return packet_snr(self.rssi_dbm, self.noise_dbm, self.agc_db)

    def replace(self, **changes) -> "CsiMeasurement":
        kw = dict(matrices=self.matrices, rssi_dbm=self.rssi_dbm, noise_dbm=self.noise_dbm,
                  agc_db=self.agc_db, timestamp_us=self.timestamp_us)
        kw.update(changes)
        return CsiMeasurement(**kw)

    def scaled(self, gain_db: float) -> "CsiMeasurement":
        """Same channel with every path gain changed by ``gain_db`` (RSSI follows)."""
        amp = 10.0 ** (gain_db / 20.0)
        return self.replace(matrices=self.matrices * amp,
                            rssi_dbm=tuple(r + gain_db for r in self.rssi_dbm))

    def __eq__(self, other):
        if not isinstance(other, CsiMeasurement):
            return NotImplemented
        return (self.timestamp_us == other.timestamp_us
                and self.rssi_dbm == other.rssi_dbm
                and self.noise_dbm == other.noise_dbm
                and self.agc_db == other.agc_db
                and self.matrices.shape == other.matrices.shape
                and bool(np.array_equal(self.matrices, other.matrices)))

    __hash__ = None


def flat_csi(snr_db: float, n_rx: int = 1, n_tx: int = 1, n_sub: int = 56,
             timestamp_us: int = 0) -> CsiMeasurement:
    """Frequency-flat channel with per-antenna Packet SNR ``snr_db``.

    Every entry has magnitude ``sqrt(snr / n_tx)``; phases follow a DFT pattern
    so square MIMO channels are orthogonal (full rank).
    """
    r = np.arange(n_rx)[:, None]
    c = np.arange(n_tx)[None, :]
    size = max(n_rx, n_tx)
    pattern = np.exp(-2j * np.pi * r * c / size)
    amp = np.sqrt(10.0 ** (snr_db / 10.0) / n_tx)
    m = np.broadcast_to(amp * pattern, (n_sub, n_rx, n_tx))
    return CsiMeasurement.from_matrices(m, timestamp_us=timestamp_us)


def quantize_matrices(matrices: np.ndarray, bits: int) -> tuple[np.ndarray, float]:
    """Integer CSI on a signed ``bits``-bit grid plus the scale back to floats.

    The largest of all |re|, |im| maps to full scale ``2**(bits-1) - 1``.
    """
    if not 2 <= bits <= 16:
        raise ValueError(f"bits must be in [2, 16], got {bits}")
    m = np.asarray(matrices)
    peak = float(max(np.abs(m.real).max(initial=0.0), np.abs(m.imag).max(initial=0.0)))
    full = 2 ** (bits - 1) - 1
    if peak == 0.0:
        return np.zeros(m.shape + (2,), dtype=np.int64), 0.0
    step = peak / full
    ints = np.stack([np.rint(m.real / step), np.rint(m.imag / step)], axis=-1).astype(np.int64)
    return ints, step


def dequantize_matrices(ints: np.ndarray, step: float) -> np.ndarray:
    ints = np.asarray(ints, dtype=float)
    return (ints[..., 0] + 1j * ints[..., 1]) * step


def quantize_csi(csi, bits: int):
    """CSI as reported by hardware with signed ``bits``-bit I/Q resolution.

    Scaling is per record. A :class:`ChannelTrace` is quantized record by record.
    """
    if isinstance(csi, ChannelTrace):
        return ChannelTrace(tuple(quantize_csi(r, bits) for r in csi.records),
                            csi.interval_us, csi.encoding)
    ints, step = quantize_matrices(csi.matrices, bits)
    if step == 0.0:
        return csi
    return csi.replace(matrices=dequantize_matrices(ints, step))


@dataclass(frozen=True, eq=False)
class ChannelTrace:
    """Time-ordered CSI records sharing one set of dimensions."""

    records: tuple[CsiMeasurement, ...]
    interval_us: int = 0
    encoding: str = "f32"
    n_rx: int = field(default=0)
    n_tx: int = field(default=0)
    n_sub: int = field(default=0)

    def __post_init__(self):
        recs = tuple(self.records)
        if not recs:
            raise ValueError("trace has no records")
        first = recs[0]
        dims = (first.n_rx, first.n_tx, first.n_sub)
        for i, r in enumerate(recs):
            if (r.n_rx, r.n_tx, r.n_sub) != dims:
                raise ValueError(f"record {i}: dimensions {(r.n_rx, r.n_tx, r.n_sub)} != {dims}")
            if i and r.timestamp_us <= recs[i - 1].timestamp_us:
                raise ValueError(f"record {i}: timestamps must be strictly increasing")
        if self.encoding not in ("f32", "q8"):
            raise ValueError(f"unknown encoding {self.encoding!r}")
        object.__setattr__(self, "records", recs)
        object.__setattr__(self, "n_rx", dims[0])
        object.__setattr__(self, "n_tx", dims[1])
        object.__setattr__(self, "n_sub", dims[2])

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def timestamps_us(self) -> np.ndarray:
        return np.array([r.timestamp_us for r in self.records], dtype=np.int64)

    @property
    def duration_us(self) -> int:
        return self.records[-1].timestamp_us - self.records[0].timestamp_us

    def __eq__(self, other):
        if not isinstance(other, ChannelTrace):
            return NotImplemented
        return (self.interval_us == other.interval_us and self.encoding == other.encoding
                and len(self) == len(other)
                and all(a == b for a, b in zip(self.records, other.records)))

    __hash__ = None
