"""Effective SNR link model.

Pipeline for one configuration: CSI -> Effective CSI (transmitter adaptation)
-> per-tone per-stream SNRs (receiver combiner) -> Effective BER / Effective SNR
per modulation -> threshold decision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import erfc, erfcinv

from . import _kernels as _k
from .ber import BER_FLOOR, BER_ROWS, _TOP_MARGIN, clamp_ber, inv_ber
from .csi import CsiMeasurement
from .mcs import McsEntry, mcs_set

WIDTHS = ("full", "lower20", "upper20")
COMBINERS = ("selection", "mrc", "mmse")


# --------------------------------------------------------------------------
# configuration types


class Mapping:
    """Spatial mapping from streams to transmit antennas.

    ``direct`` puts stream j on the j-th selected antenna, ``walsh`` spreads
    streams with Hadamard columns, ``expansion`` spreads S streams evenly over
    all selected antennas after an inner direct/Walsh mapping, and ``explicit``
    takes caller matrices of shape (M, S) or per tone (T, M, S).
    """

    __slots__ = ("kind", "inner", "matrices")

    def __init__(self, kind: str = "direct", inner: str = "direct", matrices=None):
        if kind not in ("direct", "walsh", "expansion", "explicit"):
            raise ValueError(f"unknown mapping {kind!r}")
        if inner not in ("direct", "walsh"):
            raise ValueError(f"expansion inner mapping must be direct or walsh, got {inner!r}")
        if (kind == "explicit") != (matrices is not None):
            raise ValueError("explicit mapping needs matrices (and only it takes them)")
        if matrices is not None:
            matrices = np.array(matrices, dtype=np.complex128)
            if matrices.ndim not in (2, 3):
                raise ValueError("explicit matrices must be (M, S) or (T, M, S)")
            matrices.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "inner", inner if kind == "expansion" else "direct")
        object.__setattr__(self, "matrices", matrices)

    def __setattr__(self, name, value):
        raise AttributeError("Mapping is immutable")

    @property
    def _key(self):
        return (self.kind, self.inner, id(self.matrices) if self.matrices is not None else None)

    def __eq__(self, other):
        return isinstance(other, Mapping) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        if self.kind == "expansion":
            return f"Mapping('expansion', inner={self.inner!r})"
        return f"Mapping({self.kind!r})"

    def __str__(self):
        return f"expansion({self.inner})" if self.kind == "expansion" else self.kind


DIRECT = Mapping("direct")
WALSH = Mapping("walsh")


def expansion(inner: str = "direct") -> Mapping:
    return Mapping("expansion", inner=inner)


def explicit(matrices) -> Mapping:
    return Mapping("explicit", matrices=matrices)


@dataclass(frozen=True)
class TxConfig:
    """Transmitter setting; ``antenna_subset=None`` means all antennas."""

    mcs: McsEntry
    antenna_subset: Optional[tuple[int, ...]] = None
    mapping: Mapping = DIRECT
    power_offset_db: float = 0.0
    width: str = "full"

    def __post_init__(self):
        if self.antenna_subset is not None:
            object.__setattr__(self, "antenna_subset", tuple(int(a) for a in self.antenna_subset))
            if len(set(self.antenna_subset)) != len(self.antenna_subset):
                raise ValueError("duplicate TX antenna in subset")
        if self.width not in WIDTHS:
            raise ValueError(f"width must be one of {WIDTHS}")
        if self.mapping.kind in ("direct", "walsh") and self.antenna_subset is not None \
                and len(self.antenna_subset) < self.mcs.n_streams:
            raise ValueError(f"{self.mcs.n_streams} streams need at least as many TX antennas")

    @property
    def n_streams(self) -> int:
        return self.mcs.n_streams

    def label(self) -> str:
        ants = "all" if self.antenna_subset is None else "".join(map(str, self.antenna_subset))
        parts = [str(self.mcs), f"tx{ants}", str(self.mapping)]
        if self.power_offset_db:
            parts.append(f"{self.power_offset_db:+g}dB")
        if self.width != "full":
            parts.append(self.width)
        return "/".join(parts)


@dataclass(frozen=True)
class RxConfig:
    """Receiver setting; ``antenna_subset=None`` means all antennas."""

    antenna_subset: Optional[tuple[int, ...]] = None
    combiner: str = "mmse"
    ml_gain_db: float = 0.0
    adc_bits: Optional[int] = 6

    def __post_init__(self):
        if self.antenna_subset is not None:
            object.__setattr__(self, "antenna_subset", tuple(int(a) for a in self.antenna_subset))
            if len(set(self.antenna_subset)) != len(self.antenna_subset):
                raise ValueError("duplicate RX antenna in subset")
        if self.combiner not in COMBINERS:
            raise ValueError(f"combiner must be one of {COMBINERS}")
        if self.ml_gain_db < 0:
            raise ValueError("ml_gain_db must be >= 0")
        if self.adc_bits is not None and self.adc_bits < 1:
            raise ValueError("adc_bits must be positive")


Config = tuple[TxConfig, RxConfig]


@dataclass(frozen=True, eq=False)
class EffectiveCsi:
    """Per-tone N x S matrices whose columns are spatial streams."""

    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=np.complex128)
        if m.ndim != 3:
            raise ValueError("Effective CSI must be (n_sub, n_rx, n_streams)")
        object.__setattr__(self, "matrices", m)

    @property
    def n_sub(self) -> int:
        return self.matrices.shape[0]

    @property
    def n_rx(self) -> int:
        return self.matrices.shape[1]

    @property
    def n_streams(self) -> int:
        return self.matrices.shape[2]


@dataclass(frozen=True)
class EffectiveSnrResult:
    beta_eff: float
    rho_eff_db: float
    modulation: int
    clamped: bool = False

    @property
    def rho_eff(self) -> float:
        return 10.0 ** (self.rho_eff_db / 10.0)


# --------------------------------------------------------------------------
# Effective CSI


def _hadamard(n: int) -> np.ndarray:
    h = np.ones((1, 1))
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


def _walsh(m: int, s: int) -> np.ndarray:
    """First ``m`` rows / ``s`` columns of a Hadamard matrix, unit column norm."""
    return _hadamard(max(m, s))[:m, :s] / math.sqrt(m)


def mapping_matrix(mapping: Mapping, n_ant: int, n_streams: int) -> np.ndarray:
    """(M, S) mapping for the built-in kinds (explicit matrices are returned as given)."""
    m, s = n_ant, n_streams
    if mapping.kind == "explicit":
        v = mapping.matrices
        if v.shape[-2:] != (m, s):
            raise ValueError(f"explicit mapping must be {m}x{s} per tone, got {v.shape[-2:]}")
        return v
    if mapping.kind in ("direct", "walsh") and m < s:
        raise ValueError(f"{s} streams need at least {s} TX antennas, have {m}")
    if mapping.kind == "direct":
        return np.eye(m, s)
    if mapping.kind == "walsh":
        return _walsh(m, s)
    # spatial expansion: antenna r carries stream r mod S, power spread over M
    e = np.zeros((m, s))
    e[np.arange(m), np.arange(m) % s] = 1.0
    inner = np.eye(s) if mapping.inner == "direct" else _walsh(s, s)
    return math.sqrt(s / m) * (e @ inner)


def _tone_slice(width: str, n_sub: int) -> slice:
    if width == "full":
        return slice(None)
    if n_sub != 114:
        raise ValueError(f"{width} needs a 40 MHz (114-tone) CSI, got {n_sub} tones")
    return slice(0, 56) if width == "lower20" else slice(58, 114)


def _check_subset(subset, n: int, what: str):
    if subset is None:
        return None
    if not subset or any(a < 0 or a >= n for a in subset):
        raise ValueError(f"invalid {what} antenna subset {subset} for {n} antennas")
    return list(subset)


def _effective_matrices(h: np.ndarray, tx: TxConfig) -> np.ndarray:
    cols = _check_subset(tx.antenna_subset, h.shape[2], "TX")
    if cols is not None:
        h = h[:, :, cols]
    h = h[_tone_slice(tx.width, h.shape[0])]
    s = tx.mcs.n_streams
    v = mapping_matrix(tx.mapping, h.shape[2], s)
    if v.ndim == 3 and v.shape[0] != h.shape[0]:
        raise ValueError(f"explicit mapping has {v.shape[0]} tones, channel has {h.shape[0]}")
    scale = 10.0 ** (tx.power_offset_db / 20.0) / math.sqrt(s)
    return (h @ v) * scale


def effective_csi(csi: CsiMeasurement, tx: TxConfig) -> EffectiveCsi:
    """Channel the receiver would measure if the link ran in configuration ``tx``."""
    return EffectiveCsi(_effective_matrices(csi.matrices, tx))


# --------------------------------------------------------------------------
# subchannel SNRs


def _mmse_snrs(hp: np.ndarray) -> np.ndarray:
    s = hp.shape[2]
    if s == 1:
        return np.sum(hp.real ** 2 + hp.imag ** 2, axis=1)
    gram = np.conj(np.swapaxes(hp, 1, 2)) @ hp
    gram[:, np.arange(s), np.arange(s)] += 1.0
    y = np.linalg.inv(gram)
    diag = y[:, np.arange(s), np.arange(s)].real
    return 1.0 / diag - 1.0


def _subchannel(hp: np.ndarray, rx: RxConfig) -> np.ndarray:
    rows = _check_subset(rx.antenna_subset, hp.shape[1], "RX")
    if rows is not None:
        hp = hp[:, rows, :]
    s = hp.shape[2]
    if rx.combiner == "mmse":
        if s > hp.shape[1]:
            raise ValueError(f"MMSE needs at least {s} RX antennas for {s} streams")
        snr = _mmse_snrs(hp)
    else:
        if s != 1:
            raise ValueError(f"{rx.combiner} combining supports one stream, got {s}")
        power = hp[:, :, 0].real ** 2 + hp[:, :, 0].imag ** 2
        if rx.combiner == "mrc":
            snr = power.sum(axis=1)[:, None]
        else:
            best = int(np.argmax(power.sum(axis=0)))
            snr = power[:, best][:, None]
    snr = np.maximum(snr, 0.0)
    if rx.adc_bits is not None:
        ceiling = 10.0 ** (6.02 * rx.adc_bits / 10.0)
        snr = snr * ceiling / (snr + ceiling)
    if rx.ml_gain_db:
        snr = snr * 10.0 ** (rx.ml_gain_db / 10.0)
    return snr


def subchannel_snrs(eff: EffectiveCsi, rx: RxConfig) -> np.ndarray:
    """Linear SNR per tone per stream, flattened tone-major (length T*S)."""
    m = eff.matrices
    if not np.all(np.isfinite(m)):
        raise ValueError("Effective CSI contains non-finite entries")
    return _subchannel(m, rx).reshape(-1)


def config_snrs(csi: CsiMeasurement, tx: TxConfig, rx: RxConfig) -> np.ndarray:
    """(T, S) subchannel SNR grid for one configuration."""
    return _subchannel(_effective_matrices(csi.matrices, tx), rx)


# --------------------------------------------------------------------------
# Effective SNR


def effective_snr(snrs, k: int) -> EffectiveSnrResult:
    """Effective SNR of a set of subchannel SNRs for modulation ``k``."""
    x = np.asarray(snrs, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("need at least one subchannel SNR")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("subchannel SNRs must be finite and non-negative")
    c, a = BER_ROWS[k]
    beta = float(np.mean(c * 0.5 * erfc(np.sqrt(a * x / 2.0))))
    beta_c, clamped = clamp_ber(k, beta)
    rho = inv_ber(k, beta_c)
    return EffectiveSnrResult(beta, 10.0 * math.log10(rho), k, clamped)


# --------------------------------------------------------------------------
# prediction


@dataclass(frozen=True)
class ConfigPrediction:
    tx: TxConfig
    rx: RxConfig
    rho_eff_db: float
    works: bool

    @property
    def mcs(self) -> McsEntry:
        return self.tx.mcs

    @property
    def rate_mbps(self) -> float:
        return self.tx.mcs.rate_mbps if self.works else 0.0


class Prediction:
    """Outcome of :func:`predict`; per-config entries are built on first access."""

    __slots__ = ("space", "rho_eff_db", "works", "best_index", "_entries")

    def __init__(self, space, rho_eff_db: np.ndarray, works: np.ndarray, best_index):
        self.space = space
        self.rho_eff_db = rho_eff_db
        self.works = works
        self.best_index = best_index
        self._entries = None

    @property
    def entries(self) -> tuple[ConfigPrediction, ...]:
        if self._entries is None:
            self._entries = tuple(
                ConfigPrediction(tx, rx, float(r), bool(w))
                for (tx, rx), r, w in zip(self.space, self.rho_eff_db, self.works))
        return self._entries

    @property
    def best(self) -> Optional[ConfigPrediction]:
        return None if self.best_index is None else self.entries[self.best_index]

    @property
    def best_rate_mbps(self) -> float:
        if self.best_index is None:
            return 0.0
        return self.space[self.best_index][0].mcs.rate_mbps


def selection_key(tx: TxConfig, position: int = 0):
    """Sort key: faster first, then fewer streams, then lower MCS index."""
    return (-tx.mcs.rate_mbps, tx.mcs.n_streams, tx.mcs.index, position)


def choose_best(entries: Sequence[ConfigPrediction]) -> Optional[ConfigPrediction]:
    working = [(selection_key(e.tx, i), e) for i, e in enumerate(entries) if e.works]
    return min(working, key=lambda p: p[0])[1] if working else None


class _Plan:
    """Configurations grouped by shared Effective CSI, evaluated in bulk.

    Configurations that differ only in MCS (same stream count) share one
    Effective CSI; within a group each distinct modulation needs one
    Effective SNR.
    """

    def __init__(self, space: tuple[Config, ...]):
        self.space = space
        groups: dict = {}
        for i, (tx, rx) in enumerate(space):
            key = (tx.antenna_subset, tx.mapping, tx.power_offset_db, tx.width,
                   tx.mcs.n_streams, rx)
            groups.setdefault(key, []).append(i)
        self.groups = []
        self.config_pair = np.empty(len(space), dtype=np.int64)
        pair_c, pair_a = [], []
        for members in groups.values():
            tx, rx = space[members[0]]
            mods = sorted({space[i][0].mcs.bits_per_symbol for i in members})
            first = len(pair_c)
            for i in members:
                self.config_pair[i] = first + mods.index(space[i][0].mcs.bits_per_symbol)
            pair_c += [BER_ROWS[k][0] for k in mods]
            pair_a += [BER_ROWS[k][1] for k in mods]
            half_a = np.array([BER_ROWS[k][1] / 2.0 for k in mods])
            self.groups.append((tx, rx, first, half_a))
        self.c = np.array(pair_c)
        self.a = np.array(pair_a)
        self.top = self.c * 0.5 * (1.0 - _TOP_MARGIN)
        self.order = np.array(sorted(range(len(space)),
                                     key=lambda i: selection_key(space[i][0], i)))
        self.mcs_index = [tx.mcs.index for tx, _ in space]
        self._layouts: dict = {}

    def _layout(self, shape):
        """Per-group kernel arguments for CSI of ``shape``; validates once per shape."""
        lay = self._layouts.get(shape)
        if lay is not None:
            return lay
        probe = np.zeros(shape, dtype=np.complex128)
        lay = []
        for tx, rx, first, half_a in self.groups:
            _subchannel(_effective_matrices(probe, tx), rx)  # raises on bad config
            n_sub, n_rx, n_tx = shape
            cols = np.arange(n_tx) if tx.antenna_subset is None else np.array(tx.antenna_subset)
            rows = np.arange(n_rx) if rx.antenna_subset is None else np.array(rx.antenna_subset)
            sl = _tone_slice(tx.width, n_sub)
            t0, t1, _ = sl.indices(n_sub)
            s = tx.mcs.n_streams
            v = np.asarray(mapping_matrix(tx.mapping, len(cols), s), dtype=np.complex128)
            v = v * (10.0 ** (tx.power_offset_db / 20.0) / math.sqrt(s))
            if v.ndim == 2:
                v = v[None]
            combiner = {"selection": _k.SELECTION, "mrc": _k.MRC, "mmse": _k.MMSE}[rx.combiner]
            ceiling = 0.0 if rx.adc_bits is None else 10.0 ** (6.02 * rx.adc_bits / 10.0)
            gain = 10.0 ** (rx.ml_gain_db / 10.0)
            sums = np.empty(len(half_a))
            lay.append((rows.astype(np.int64), cols.astype(np.int64), t0, t1,
                        np.ascontiguousarray(v), combiner, ceiling, gain, half_a, first, sums))
        self._layouts[shape] = lay
        return lay

    def rho_eff_db(self, h: np.ndarray) -> np.ndarray:
        beta = np.empty(len(self.c))
        kernel = _k.group_ber_sums
        for rows, cols, t0, t1, v, comb, ceil, gain, half_a, first, sums in self._layout(h.shape):
            count = kernel(h, rows, cols, t0, t1, v, comb, ceil, gain, half_a, sums)
            beta[first:first + len(sums)] = sums / count
        beta *= 0.5 * self.c
        np.clip(beta, BER_FLOOR, self.top, out=beta)
        q = erfcinv(2.0 * beta / self.c)
        return 10.0 * np.log10(2.0 * q * q / self.a)

    def run(self, csi: CsiMeasurement, thresholds) -> Prediction:
        rho = self.rho_eff_db(csi.matrices)[self.config_pair]
        try:
            tau = np.array([thresholds[m] for m in self.mcs_index])
        except KeyError as exc:
            raise KeyError(f"no threshold for MCS {exc.args[0]}") from None
        works = rho >= tau
        ranked = works[self.order]
        best = int(self.order[ranked.argmax()]) if ranked.any() else None
        return Prediction(self.space, rho, works, best)


_PLANS: dict = {}


def compile_space(space: Sequence[Config]) -> _Plan:
    """Precompiled evaluator for ``space``; reused while the same config objects are passed."""
    cached = _PLANS.get(id(space))
    if cached is not None:
        obj, members, plan = cached
        if obj is space and len(space) == len(members) \
                and all(a is b for a, b in zip(space, members)):
            return plan
    plan = _Plan(tuple(space))
    if len(_PLANS) > 64:
        _PLANS.clear()
    _PLANS[id(space)] = (space, tuple(space), plan)
    return plan


def predict(csi: CsiMeasurement, space: Sequence[Config], thresholds) -> Prediction:
    """Evaluate every configuration and pick the fastest predicted to work.

    ``thresholds`` maps MCS index to dB (a :class:`ThresholdTable` or dict).
    Ties in rate go to fewer streams, then the lower MCS index.
    """
    if not len(space):
        raise ValueError("configuration space is empty")
    return compile_space(space).run(csi, thresholds)


def rate_space(n_tx: int, n_rx: int, mcs_names: str = "all", *,
               mapping: Mapping = DIRECT, rx: Optional[RxConfig] = None,
               power_offset_db: float = 0.0, width: str = "full") -> list[Config]:
    """Rate-selection space: every MCS of a set the antennas can carry.

    S-stream rates transmit on the first S antennas with ``mapping`` (for
    spatial expansion, on all antennas) and receive on all antennas.
    """
    rx = rx or RxConfig()
    n_rx_used = n_rx if rx.antenna_subset is None else len(rx.antenna_subset)
    max_s = min(n_tx, n_rx_used) if rx.combiner == "mmse" else 1
    space = []
    for m in mcs_set(mcs_names, max_streams=max_s):
        subset = None if mapping.kind in ("expansion", "explicit") else tuple(range(m.n_streams))
        space.append((TxConfig(m, subset, mapping, power_offset_db, width), rx))
    return space
