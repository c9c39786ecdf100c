"""Synthetic frequency-selective MIMO channels.

Tapped-delay-line Rayleigh fading with an exponential power-delay profile and
first-order Gauss-Markov evolution of the taps from record to record.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .csi import DEFAULT_NOISE_DBM, ChannelTrace, CsiMeasurement, rssi_from_matrices


def tone_indices(n_sub: int) -> tuple[np.ndarray, int]:
    """Signed OFDM tone indices carried in the CSI and the FFT size."""
    if n_sub == 56:
        return np.r_[np.arange(-28, 0), np.arange(1, 29)], 64
    if n_sub == 114:
        return np.r_[np.arange(-58, -1), np.arange(2, 59)], 128
    raise ValueError(f"n_sub must be 56 or 114, got {n_sub}")


@dataclass(frozen=True)
class ChannelGenSpec:
    """Parameters of :func:`generate_trace`.

    ``mobile_taps`` restricts temporal evolution to the last (weakest) taps,
    leaving the rest frozen, which mimics people moving near a fixed link.
    ``csi_noise_var`` adds CSI estimation noise in noise-normalized units.
    ``rx_corr`` and ``tx_corr`` set exponential antenna correlation
    (Kronecker model, ``R[i, j] = corr ** |i - j|``).
    """

    seed: int = 0
    n_tx: int = 1
    n_rx: int = 1
    n_sub: int = 56
    n_taps: int = 6
    delay_spread_samples: float = 2.0
    mean_snr_db: float = 20.0
    doppler_coeff: float = 0.99
    n_records: int = 100
    interval_us: int = 1000
    mobile_taps: Optional[int] = None
    csi_noise_var: float = 0.0
    noise_dbm: float = DEFAULT_NOISE_DBM
    rx_corr: float = 0.0
    tx_corr: float = 0.0

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "n_taps", "n_records", "interval_us"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_sub not in (56, 114):
            raise ValueError("n_sub must be 56 or 114")
        if self.delay_spread_samples < 0:
            raise ValueError("delay_spread_samples must be >= 0")
        if not 0.0 <= self.doppler_coeff < 1.0:
            raise ValueError("doppler_coeff must lie in [0, 1)")
        if self.mobile_taps is not None and not 0 <= self.mobile_taps <= self.n_taps:
            raise ValueError("mobile_taps must lie in [0, n_taps]")
        if self.csi_noise_var < 0:
            raise ValueError("csi_noise_var must be >= 0")
        for name in ("rx_corr", "tx_corr"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")


def power_delay_profile(n_taps: int, delay_spread: float) -> np.ndarray:
    """Exponential profile ``exp(-l / delay_spread)`` normalized to unit sum."""
    lags = np.arange(n_taps, dtype=float)
    if delay_spread == 0:
        pdp = (lags == 0).astype(float)
    else:
        pdp = np.exp(-lags / delay_spread)
    return pdp / pdp.sum()


def correlation_sqrt(n: int, corr: float) -> np.ndarray:
    """Symmetric square root of the exponential correlation matrix."""
    idx = np.arange(n)
    r = corr ** np.abs(idx[:, None] - idx[None, :])
    w, v = np.linalg.eigh(r)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _cn(rng: np.random.Generator, shape, var) -> np.ndarray:
    scale = np.sqrt(np.asarray(var) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_trace(spec: ChannelGenSpec) -> ChannelTrace:
    """Deterministic synthetic trace for ``spec``."""
    rng = np.random.default_rng(spec.seed)
    pdp = power_delay_profile(spec.n_taps, spec.delay_spread_samples)
    tones, nfft = tone_indices(spec.n_sub)
    # (n_sub, n_taps) DFT evaluated at the carried tones
    dft = np.exp(-2j * np.pi * np.outer(tones, np.arange(spec.n_taps)) / nfft)
    amp = np.sqrt(10.0 ** (spec.mean_snr_db / 10.0) / spec.n_tx)

    shape = (spec.n_rx, spec.n_tx, spec.n_taps)
    taps = _cn(rng, shape, pdp)
    a = spec.doppler_coeff
    innovation = np.sqrt(1.0 - a * a)
    moving = np.ones(spec.n_taps, dtype=bool)
    if spec.mobile_taps is not None:
        moving[: spec.n_taps - spec.mobile_taps] = False

    rx_sqrt = correlation_sqrt(spec.n_rx, spec.rx_corr) if spec.rx_corr else None
    tx_sqrt = correlation_sqrt(spec.n_tx, spec.tx_corr) if spec.tx_corr else None

    records = []
    for i in range(spec.n_records):
        if i:
            step = a * taps + innovation * _cn(rng, shape, pdp)
            taps = np.where(moving, step, taps)
        h = amp * np.einsum("tl,rxl->trx", dft, taps)
        if rx_sqrt is not None:
            h = rx_sqrt @ h
        if tx_sqrt is not None:
            h = h @ tx_sqrt
        if spec.csi_noise_var > 0:
            h = h + _cn(rng, h.shape, spec.csi_noise_var)
        records.append(CsiMeasurement(h, rssi_from_matrices(h, spec.noise_dbm),
                                      spec.noise_dbm, 0.0, i * spec.interval_us))
    return ChannelTrace(tuple(records), spec.interval_us, "f32")


def apply_gain_profile(trace: ChannelTrace, gains_db: Sequence[float]) -> ChannelTrace:
    """Scale record ``i`` by ``gains_db[i]`` (large-scale path loss / shadowing)."""
    gains = np.asarray(gains_db, dtype=float)
    if gains.shape != (len(trace),):
        raise ValueError("need one gain per record")
    return ChannelTrace(tuple(r.scaled(g) for r, g in zip(trace.records, gains)),
                        trace.interval_us, trace.encoding)


def random_walk_db(n: int, std_db: float, coeff: float, seed: int) -> np.ndarray:
    """Zero-mean AR(1) sequence in dB with stationary std ``std_db``."""
    rng = np.random.default_rng(seed)
    out = np.empty(n)
    x = rng.standard_normal() * std_db
    innov = std_db * np.sqrt(1.0 - coeff * coeff)
    for i in range(n):
        if i:
            x = coeff * x + innov * rng.standard_normal()
        out[i] = x
    return out
