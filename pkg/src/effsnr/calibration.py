"""Threshold fitting, transition windows and rate confusion from delivery data."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .thresholds import ThresholdTable

GOOD_PRR = 0.9
BAD_PRR = 0.8
TRANSITION = (0.1, 0.9)


@dataclass(frozen=True)
class DeliverySample:
    mcs_index: int
    snr_db: float
    prr: float
    link_id: str = ""

    def __post_init__(self):
        if not 0.0 <= self.prr <= 1.0:
            raise ValueError(f"prr must lie in [0, 1], got {self.prr}")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")


@dataclass(frozen=True)
class ThresholdFit:
    threshold_db: float
    balanced_error: float
    false_negative: float
    false_positive: float
    flag: Optional[str] = None


@dataclass(frozen=True)
class CalibrationReport:
    thresholds: ThresholdTable
    fits: Mapping[int, ThresholdFit]
    windows: Mapping[int, tuple[Optional[float], Optional[float]]] = field(default_factory=dict)

    @property
    def balanced_error(self) -> dict[int, float]:
        return {m: f.balanced_error for m, f in self.fits.items()}

    @property
    def window_5_95_db(self) -> dict[int, Optional[float]]:
        return {m: w[0] for m, w in self.windows.items()}

    @property
    def window_25_75_db(self) -> dict[int, Optional[float]]:
        return {m: w[1] for m, w in self.windows.items()}


def candidate_thresholds(values) -> np.ndarray:
    """Observed values plus midpoints between consecutive distinct values."""
    v = np.unique(np.asarray(values, dtype=float))
    if v.size < 2:
        return v
    return np.sort(np.concatenate([v, (v[:-1] + v[1:]) / 2.0]))


def fit_threshold(good_snr, bad_snr) -> ThresholdFit:
    """Threshold balancing false negatives (good below) and false positives (bad at/above)."""
    good = np.sort(np.asarray(good_snr, dtype=float))
    bad = np.sort(np.asarray(bad_snr, dtype=float))
    if good.size == 0 and bad.size == 0:
        raise ValueError("no samples to fit")
    if bad.size == 0:
        return ThresholdFit(float(good[0] - 1.0), 0.0, 0.0, 0.0, "unconstrained-low")
    if good.size == 0:
        return ThresholdFit(float(bad[-1] + 1.0), 0.0, 0.0, 0.0, "unconstrained-high")
    cand = candidate_thresholds(np.concatenate([good, bad]))
    fn = np.searchsorted(good, cand, side="left") / good.size
    fp = (bad.size - np.searchsorted(bad, cand, side="left")) / bad.size
    gap = np.round(np.abs(fn - fp), 12)
    i = int(np.argmin(gap))  # first minimum = lowest threshold
    return ThresholdFit(float(cand[i]), float(max(fn[i], fp[i])), float(fn[i]), float(fp[i]))


def _by_mcs(samples: Iterable[DeliverySample]) -> dict[int, list[DeliverySample]]:
    groups: dict[int, list[DeliverySample]] = defaultdict(list)
    for s in samples:
        groups[s.mcs_index].append(s)
    return dict(sorted(groups.items()))


def fit_thresholds(samples: Sequence[DeliverySample], receiver_model: str = "mmse",
                   packet_len_bytes: int = 1500) -> CalibrationReport:
    """Per-MCS balanced-error thresholds.

    Links with PRR >= 0.9 are good, PRR < 0.8 bad; the band between is ignored.
    """
    fits = {}
    for mcs, group in _by_mcs(samples).items():
        good = [s.snr_db for s in group if s.prr >= GOOD_PRR]
        bad = [s.snr_db for s in group if s.prr < BAD_PRR]
        if not good and not bad:
            continue
        fits[mcs] = fit_threshold(good, bad)
    table = ThresholdTable({m: f.threshold_db for m, f in fits.items()}, receiver_model,
                           packet_len_bytes, flags={m: f.flag for m, f in fits.items() if f.flag})
    return CalibrationReport(table, fits, transition_windows(samples))


def transition_windows(samples: Sequence[DeliverySample], min_samples: int = 4
                       ) -> dict[int, tuple[Optional[float], Optional[float]]]:
    """Per-MCS (5-95, 25-75) percentile widths of SNRs of links in transition."""
    lo, hi = TRANSITION
    out = {}
    for mcs, group in _by_mcs(samples).items():
        x = np.array([s.snr_db for s in group if lo < s.prr < hi])
        if x.size < min_samples:
            out[mcs] = (None, None)
            continue
        p5, p25, p75, p95 = np.percentile(x, [5, 25, 75, 95])
        out[mcs] = (float(p95 - p5), float(p75 - p25))
    return out


def rate_confusion(points: Iterable[tuple[float, float]], bin_db: float = 1.0
                   ) -> dict[float, tuple[float, float]]:
    """Best and worst fastest-working rate among links in each metric bin.

    ``points`` are (metric_db, fastest_rate_mbps) pairs, one per link. Keys
    are the lower bin edges.
    """
    bins: dict[float, list[float]] = defaultdict(list)
    for metric, rate in points:
        bins[math.floor(metric / bin_db) * bin_db].append(float(rate))
    return {b: (max(r), min(r)) for b, r in sorted(bins.items())}


# ---------------------------------------------------------------------- CSV


SAMPLE_COLUMNS = ("mcs", "link_id", "snr_db", "prr")


def read_samples_csv(path) -> list[DeliverySample]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(SAMPLE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"sample CSV lacks columns {sorted(missing)}")
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                out.append(DeliverySample(int(row["mcs"]), float(row["snr_db"]),
                                          float(row["prr"]), row["link_id"]))
            except ValueError as exc:
                raise ValueError(f"line {line}: {exc}") from None
    return out


def write_samples_csv(samples: Iterable[DeliverySample], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_COLUMNS)
        for s in samples:
            w.writerow([s.mcs_index, s.link_id, repr(float(s.snr_db)), repr(float(s.prr))])


def report_rows(report: CalibrationReport) -> list[dict]:
    rows = []
    for mcs, fit in report.fits.items():
        w = report.windows.get(mcs, (None, None))
        rows.append({"mcs": mcs, "threshold_db": fit.threshold_db,
                     "balanced_error": fit.balanced_error,
                     "window_5_95_db": w[0], "window_25_75_db": w[1],
                     "flag": fit.flag or ""})
    return rows
