"""Network configuration decisions driven by per-link predictions.

Access point and channel selection, relay selection with expected
transmission time, transmit power trimming, and CSI-based mobility
classification.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np

from .csi import CsiMeasurement
from .model import predict, rate_space

PACKET_SNR = "packet_snr"
EFFECTIVE_SNR_BITRATE = "effective_snr_bitrate"
METRIC_KINDS = (PACKET_SNR, EFFECTIVE_SNR_BITRATE)


def _default_space(csi: CsiMeasurement, space):
    return rate_space(csi.n_tx, csi.n_rx) if space is None else space


def link_bitrate(csi: CsiMeasurement, thresholds, space=None) -> float:
    """Fastest rate predicted to work on this link (0 when none does)."""
    return predict(csi, _default_space(csi, space), thresholds).best_rate_mbps


def link_metric(csi: CsiMeasurement, kind: str, thresholds=None, space=None) -> float:
    if kind == PACKET_SNR:
        return csi.packet_snr_db()
    if kind == EFFECTIVE_SNR_BITRATE:
        if thresholds is None:
            raise ValueError("effective_snr_bitrate needs a threshold table")
        return link_bitrate(csi, thresholds, space)
    raise ValueError(f"unknown metric kind {kind!r}; expected one of {METRIC_KINDS}")


@dataclass(frozen=True)
class Decision:
    chosen: Hashable
    metrics: Mapping[Hashable, float]


def _argmax_choice(candidates, kind, thresholds, space) -> Decision:
    if not candidates:
        raise ValueError("need at least one candidate")
    metrics = {cid: link_metric(csi, kind, thresholds, space) for cid, csi in candidates}
    top = max(metrics.values())
    chosen = min((cid for cid, v in metrics.items() if v == top), key=_id_key)
    return Decision(chosen, metrics)


def _id_key(x):
    # numbers before strings, each in natural order
    return (0, x, "") if isinstance(x, (int, float)) else (1, 0, str(x))


def select_ap(candidates: Sequence[tuple[Hashable, CsiMeasurement]], kind: str = PACKET_SNR,
              thresholds=None, space=None) -> Decision:
    """AP with the best downlink metric; ties go to the lowest id."""
    return _argmax_choice(candidates, kind, thresholds, space)


def select_channel(per_channel: Sequence[tuple[Hashable, CsiMeasurement]],
                   kind: str = PACKET_SNR, thresholds=None, space=None) -> Decision:
    """Channel with the best metric; ties go to the lowest id."""
    return _argmax_choice(per_channel, kind, thresholds, space)


# ------------------------------------------------------------------ SNR -> throughput


@dataclass(frozen=True)
class SnrThroughputCurve:
    """Nondecreasing step function from Packet SNR (dB) to throughput (Mbps).

    ``edges`` are the lower edges of retained bins. Below the first bin the
    curve is 0, above the last it holds the top value; between retained bins
    it holds the value of the bin at or below.
    """

    edges: tuple[float, ...]
    values: tuple[float, ...]
    bin_db: float = 1.0

    def __call__(self, snr_db: float) -> float:
        if not self.edges or snr_db < self.edges[0]:
            return 0.0
        i = int(np.searchsorted(self.edges, snr_db, side="right")) - 1
        return float(self.values[i])


def fit_snr_throughput_curve(points: Sequence[tuple[float, float]], bin_db: float = 1.0,
                             min_count: int = 3) -> SnrThroughputCurve:
    """Per-bin median throughput, sparse bins dropped, made monotone by a running max."""
    if not points:
        raise ValueError("need at least one sample")
    bins: dict[float, list[float]] = defaultdict(list)
    for snr, mbps in points:
        bins[math.floor(snr / bin_db) * bin_db].append(float(mbps))
    edges, values = [], []
    running = -math.inf
    for edge in sorted(bins):
        vals = bins[edge]
        if len(vals) < min_count:
            continue
        running = max(running, float(np.median(vals)))
        edges.append(edge)
        values.append(running)
    return SnrThroughputCurve(tuple(edges), tuple(values), bin_db)


# ------------------------------------------------------------------ relays


@dataclass(frozen=True)
class PathEstimate:
    """Per-bit transfer times (s/Mbit units: 1/Mbps); ``inf`` when unreachable."""

    t_direct: float
    t_relay: Mapping[Hashable, float]
    chosen: Optional[Hashable]

    @property
    def direct_mbps(self) -> float:
        return 0.0 if math.isinf(self.t_direct) else 1.0 / self.t_direct


def two_hop_mbps(b1: float, b2: float) -> float:
    """Idealized end-to-end rate of two sequential hops."""
    if b1 <= 0 or b2 <= 0:
        return 0.0
    return b1 * b2 / (b1 + b2)


def _inv(b: float) -> float:
    return math.inf if b <= 0 else 1.0 / b


def select_relay(source, dest, relays: Sequence[Hashable],
                 csi: Mapping[tuple, Optional[CsiMeasurement]], kind: str = EFFECTIVE_SNR_BITRATE,
                 thresholds=None, curve: Optional[SnrThroughputCurve] = None, space=None,
                 gain: float = 1.2) -> PathEstimate:
    """Relay minimizing two-hop transfer time, used only if it beats direct by ``gain``.

    ``csi`` maps directed pairs (a, b) to CSI, or to None for a pair known
    to be unreachable. With ``kind="packet_snr"`` bitrates come from ``curve``.
    """
    if kind == PACKET_SNR and curve is None:
        raise ValueError("packet_snr relay selection needs an SNR-throughput curve")

    def rate(a, b) -> float:
        if (a, b) not in csi:
            raise ValueError(f"missing CSI for link {a}->{b}")
        c = csi[(a, b)]
        if c is None:
            return 0.0
        if kind == PACKET_SNR:
            return curve(c.packet_snr_db())
        return link_metric(c, kind, thresholds, space)

    direct = rate(source, dest)
    paths = {}
    for r in relays:
        paths[r] = two_hop_mbps(rate(source, r), rate(r, dest))
    t_relay = {r: _inv(b) for r, b in paths.items()}
    chosen = None
    if paths:
        best = max(paths, key=lambda r: (paths[r], -relays.index(r)))
        if paths[best] > 0 and paths[best] >= gain * direct:
            chosen = best
    return PathEstimate(_inv(direct), t_relay, chosen)


# ------------------------------------------------------------------ power


@dataclass(frozen=True)
class TrimResult:
    offset_db: float
    baseline_rate_mbps: float
    baseline_mcs: Optional[int]
    flag: Optional[str] = None


def trim_power(csi: CsiMeasurement, thresholds, space=None, step_db: float = 2.0,
               floor_db: float = -26.0) -> TrimResult:
    """Lowest transmit offset (in ``step_db`` steps) keeping the predicted best rate."""
    if step_db <= 0:
        raise ValueError("step_db must be positive")
    space = list(_default_space(csi, space))
    base = predict(csi, space, thresholds)
    if base.best is None:
        return TrimResult(0.0, 0.0, None, "no-working-rate")
    target = (base.best.tx.mcs.index, base.best_rate_mbps)
    chosen = 0.0
    n_steps = int(math.floor(-floor_db / step_db + 1e-9))
    for i in range(1, n_steps + 1):
        off = -i * step_db
        shifted = [(dataclasses.replace(tx, power_offset_db=tx.power_offset_db + off), rx)
                   for tx, rx in space]
        p = predict(csi, shifted, thresholds)
        if p.best is not None and (p.best.tx.mcs.index, p.best_rate_mbps) == target:
            chosen = off
    return TrimResult(chosen, base.best_rate_mbps, target[0])


# ------------------------------------------------------------------ mobility


class MobilityState(enum.Enum):
    STATIC = "static"
    ENVIRONMENT_MOBILE = "environment_mobile"
    DEVICE_MOBILE = "device_mobile"


@dataclass(frozen=True)
class MobilityResult:
    state: MobilityState
    c_min: float
    path_min: np.ndarray  # (n_rx, n_tx) minimum correlation per spatial path


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation; zero-variance inputs give 1 if equal, else 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    den = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if den == 0.0:
        return 1.0 if np.array_equal(x, y) else 0.0
    return float(np.clip(float(dx @ dy) / den, -1.0, 1.0))


def downsample(records: Sequence[CsiMeasurement], min_spacing_us: int) -> list[CsiMeasurement]:
    kept = []
    for r in records:
        if not kept or r.timestamp_us - kept[-1].timestamp_us >= min_spacing_us:
            kept.append(r)
    return kept


def classify_mobility(records: Sequence[CsiMeasurement], win: int = 10,
                      tau_device: float = 0.9, tau_env: float = 0.99,
                      min_spacing_us: int = 4000) -> MobilityResult:
    """Classify a link from how quickly its per-path magnitude profile decorrelates.

    Records closer than ``min_spacing_us`` are dropped first. Magnitudes
    across tones are averaged over non-overlapping windows of ``win``
    records; consecutive windows are compared by Pearson correlation per
    spatial path and the smallest value decides.
    """
    recs = downsample(records, min_spacing_us) if min_spacing_us else list(records)
    if len(recs) < 2 * win:
        raise ValueError(f"need at least {2 * win} records after downsampling, got {len(recs)}")
    shape = recs[0].matrices.shape
    if any(r.matrices.shape != shape for r in recs):
        raise ValueError("records must share dimensions")
    mags = np.abs(np.stack([r.matrices for r in recs]))  # (n, T, N, M)
    n_win = len(recs) // win
    smooth = mags[: n_win * win].reshape(n_win, win, *shape).mean(axis=1)
    n_sub, n_rx, n_tx = shape
    path_min = np.ones((n_rx, n_tx))
    for r in range(n_rx):
        for t in range(n_tx):
            vals = [pearson(smooth[w, :, r, t], smooth[w + 1, :, r, t]) for w in range(n_win - 1)]
            path_min[r, t] = min(vals)
    c_min = float(path_min.min())
    if c_min < tau_device:
        state = MobilityState.DEVICE_MOBILE
    elif c_min < tau_env:
        state = MobilityState.ENVIRONMENT_MOBILE
    else:
        state = MobilityState.STATIC
    return MobilityResult(state, c_min, path_min)
