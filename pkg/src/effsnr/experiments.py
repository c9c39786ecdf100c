"""Synthetic link ensembles and oracle sweeps shared by scripts and tests."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .calibration import DeliverySample
from .channel import ChannelGenSpec, generate_trace
from .csi import CsiMeasurement
from .mcs import McsEntry, get_mcs
from .model import RxConfig, TxConfig, config_snrs, effective_snr
from .phy import prr_from_snrs


def link_ensemble(n_links: int, seed: int, n_tx: int = 1, n_rx: int = 1, n_taps: int = 8,
                  delay_spread_samples: float = 3.0, mean_snr_db: float = 20.0,
                  n_sub: int = 56) -> list[CsiMeasurement]:
    """Independent frequency-selective Rayleigh links, one record each."""
    children = np.random.SeedSequence(seed).generate_state(n_links)
    out = []
    for s in children:
        spec = ChannelGenSpec(seed=int(s), n_tx=n_tx, n_rx=n_rx, n_sub=n_sub, n_taps=n_taps,
                              delay_spread_samples=delay_spread_samples,
                              mean_snr_db=mean_snr_db, n_records=1)
        out.append(generate_trace(spec)[0])
    return out


@dataclass(frozen=True)
class SweepPoint:
    link_id: str
    mcs_index: int
    offset_db: float
    effective_snr_db: float
    packet_snr_db: float
    prr: float

    def sample(self, metric: str) -> DeliverySample:
        snr = self.effective_snr_db if metric == "effective-snr" else self.packet_snr_db
        return DeliverySample(self.mcs_index, snr, self.prr, self.link_id)


def default_tx(mcs: McsEntry, offset_db: float = 0.0) -> TxConfig:
    return TxConfig(mcs, tuple(range(mcs.n_streams)), power_offset_db=offset_db)


def _measure(csi, mcs, rx, offset, n_packets, payload_bytes, seed):
    tx = default_tx(mcs, offset)
    snrs = config_snrs(csi, tx, rx)
    prr = prr_from_snrs(snrs, mcs, n_packets, payload_bytes, seed)
    rho = effective_snr(snrs, mcs.bits_per_symbol).rho_eff_db
    return prr, rho


def sweep_transition(csi: CsiMeasurement, mcs: McsEntry, link_id: str, *,
                     rx: Optional[RxConfig] = None, n_packets: int = 20,
                     screen_packets: int = 6, payload_bytes: int = 1500,
                     step_db: float = 1.0, phase_db: float = 0.0,
                     snr_range_db: tuple[float, float] = (-10.0, 50.0),
                     points: int = 4, seed: int = 0) -> list[SweepPoint]:
    """Oracle PRR at transmit offsets around the link's delivery transition.

    Offsets lie on a grid of ``step_db`` (shifted by ``phase_db``) spanning
    ``snr_range_db`` of Packet SNR. A screening bisection with few packets
    finds the first grid point delivering at least half the packets; then
    ``points`` consecutive grid points around it are measured with
    ``n_packets`` each. PRR is assumed nondecreasing in transmit power.
    """
    rx = rx or RxConfig()
    base = csi.packet_snr_db()
    lo_snr, hi_snr = snr_range_db
    grid = np.arange(lo_snr + phase_db, hi_snr + 1e-9, step_db) - base
    ss = np.random.SeedSequence([seed, mcs.index])

    def screen(i):
        prr, _ = _measure(csi, mcs, rx, grid[i], screen_packets, payload_bytes,
                          [int(x) for x in ss.generate_state(1)] + [i, 1])
        return prr

    lo, hi = 0, len(grid) - 1
    if screen(hi) < 0.5:
        first = hi
    elif screen(lo) >= 0.5:
        first = lo
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if screen(mid) >= 0.5:
                hi = mid
            else:
                lo = mid
        first = hi
    start = min(max(first - points // 2, 0), len(grid) - points)
    out = []
    for i in range(start, start + points):
        prr, rho = _measure(csi, mcs, rx, grid[i], n_packets, payload_bytes,
                            [int(x) for x in ss.generate_state(1)] + [i, 2])
        out.append(SweepPoint(link_id, mcs.index, float(grid[i]), rho,
                              float(base + grid[i]), prr))
    return out


def sweep_ensemble(links: Sequence[CsiMeasurement], mcs_indices: Sequence[int], *,
                   seed: int = 0, **kw) -> list[SweepPoint]:
    """:func:`sweep_transition` for every link and MCS with a per-link grid phase."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, kw.get("step_db", 1.0), len(links))
    out = []
    for li, csi in enumerate(links):
        for m in mcs_indices:
            out += sweep_transition(csi, get_mcs(m), f"L{li}", phase_db=float(phases[li]),
                                    seed=seed * 1_000_003 + li, **kw)
    return out


def samples(points: Sequence[SweepPoint], metric: str) -> list[DeliverySample]:
    return [p.sample(metric) for p in points]


def scaled_space(space, offset_db: float):
    """Copy of a configuration space with every transmit offset set to ``offset_db``."""
    return [(dataclasses.replace(tx, power_offset_db=offset_db), rx) for tx, rx in space]


def varied_ensemble(n_links: int, seed: int, n_ant: int = 3, n_taps: int = 10,
                    delay_spread_db: tuple[float, float] = (0.5, 5.0),
                    max_corr: float = 0.9, gain_db: tuple[float, float] = (0.0, 0.0),
                    n_sub: int = 56) -> list[CsiMeasurement]:
    """Links with per-link delay spread, antenna correlation and gain.

    Each link draws its delay spread (samples) and its receive and transmit
    correlation uniformly from the given ranges, then is scaled by a gain
    drawn from ``gain_db`` around a 20 dB mean SNR.
    """
    rng = np.random.default_rng(seed)
    out = []
    for s in np.random.SeedSequence(seed).generate_state(n_links):
        spec = ChannelGenSpec(seed=int(s), n_tx=n_ant, n_rx=n_ant, n_sub=n_sub, n_taps=n_taps,
                              delay_spread_samples=float(rng.uniform(*delay_spread_db)),
                              mean_snr_db=20.0, n_records=1,
                              rx_corr=float(rng.uniform(0.0, max_corr)),
                              tx_corr=float(rng.uniform(0.0, max_corr)))
        out.append(generate_trace(spec)[0].scaled(float(rng.uniform(*gain_db))))
    return out


def packet_snr_choice(csi: CsiMeasurement, space, packet_thresholds) -> Optional[int]:
    """Index of the fastest configuration whose Packet SNR threshold is met."""
    from .model import selection_key
    snr = csi.packet_snr_db()
    ok = [(selection_key(tx, i), i) for i, (tx, _) in enumerate(space)
          if tx.mcs.index in packet_thresholds
          and snr + tx.power_offset_db >= packet_thresholds[tx.mcs.index]]
    return min(ok)[1] if ok else None
