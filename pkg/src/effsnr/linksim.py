"""Trace-driven rate adaptation simulator.

A single sender aggregates packets into batches limited by bytes and airtime,
transmits them over a channel replayed from a CSI trace (optionally sped
up), and adapts its MCS with one of several algorithms. A batch succeeds
when at least 80% of the per-record oracle packets overlapping it decode.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .csi import ChannelTrace, CsiMeasurement
from .mcs import McsEntry
from .model import Config, compile_space, config_snrs, rate_space, selection_key
from .phy import simulate_snr_grid

ALGORITHMS = ("effsnr", "samplerate", "samplerate-nofallback", "optimal", "delayed_optimal")


@dataclass(frozen=True)
class MacParams:
    slot_us: float = 9.0
    difs_us: float = 34.0
    cw_min: int = 15
    cw_max: int = 1023
    max_batch_bytes: int = 65000
    max_batch_duration_us: float = 4000.0
    batch_success_fraction: float = 0.8
    per_packet_bytes: int = 1500

    def __post_init__(self):
        if not 0 < self.cw_min < self.cw_max:
            raise ValueError("need 0 < cw_min < cw_max")
        if not 0 < self.batch_success_fraction <= 1:
            raise ValueError("batch_success_fraction must lie in (0, 1]")
        if self.per_packet_bytes < 1 or self.max_batch_bytes < self.per_packet_bytes:
            raise ValueError("batch must hold at least one packet")


@dataclass(frozen=True)
class SimEvent:
    t_us: float
    mcs_index: int
    batch_bytes: int
    success: bool
    bytes_delivered: int


@dataclass(frozen=True)
class SimSummary:
    algorithm: str
    speedup: float
    total_bytes: int
    duration_s: float
    fraction_of_optimal: Optional[float] = None

    @property
    def bytes_per_s(self) -> float:
        return self.total_bytes / self.duration_s if self.duration_s > 0 else 0.0

    @property
    def throughput_mbps(self) -> float:
        return 8e-6 * self.bytes_per_s


@dataclass
class SimResult:
    events: list[SimEvent]
    summary: SimSummary


def batch_plan(mcs: McsEntry, params: MacParams = MacParams()) -> tuple[int, float]:
    """Whole packets fitting both the byte cap and the airtime cap at this rate."""
    fit = min(params.max_batch_bytes,
              math.floor(mcs.rate_mbps * params.max_batch_duration_us / 8.0))
    n_packets = max(1, fit // params.per_packet_bytes)
    nbytes = n_packets * params.per_packet_bytes
    return nbytes, nbytes * 8.0 / mcs.rate_mbps


def batch_rule(delivered: Sequence[bool], params: MacParams = MacParams()) -> bool:
    return bool(np.mean(delivered) >= params.batch_success_fraction) if len(delivered) else False


def batch_outcome(records: Sequence[CsiMeasurement], tx, rx, params: MacParams = MacParams(),
                  seed=0) -> bool:
    """One oracle packet per overlapping record; success at >= 80% delivered."""
    if not records:
        raise ValueError("a batch overlaps at least one record")
    seqs = np.random.SeedSequence(seed).spawn(len(records))
    delivered = [simulate_snr_grid(config_snrs(r, tx, rx), tx.mcs, params.per_packet_bytes,
                                   np.random.default_rng(s)).delivered
                 for r, s in zip(records, seqs)]
    return batch_rule(delivered, params)


class RecordOracle:
    """Memoized per-(record, configuration) packet outcomes.

    Each record/configuration pair is simulated once with a seed derived from
    both, so every algorithm replaying the trace sees the same channel luck.
    """

    def __init__(self, trace: ChannelTrace, space: Sequence[Config], payload_bytes: int,
                 seed: int = 0):
        self.trace = trace
        self.space = list(space)
        self.payload_bytes = payload_bytes
        self.seed = seed
        self._cache: dict[tuple[int, int], bool] = {}

    def delivered(self, record: int, cfg: int) -> bool:
        key = (record, cfg)
        hit = self._cache.get(key)
        if hit is None:
            tx, rx = self.space[cfg]
            rng = np.random.default_rng([self.seed, record, cfg])
            snrs = config_snrs(self.trace[record], tx, rx)
            hit = simulate_snr_grid(snrs, tx.mcs, self.payload_bytes, rng).delivered
            self._cache[key] = hit
        return hit


# ------------------------------------------------------------------ algorithms


class _Context:
    """What the simulator exposes to algorithms."""

    def __init__(self, sim: "_Simulator"):
        self._sim = sim

    @property
    def space(self):
        return self._sim.space

    def records_for(self, t_us: float, cfg: int) -> list[int]:
        return self._sim.overlapping(t_us, self._sim.durations[cfg])

    def batch_success(self, records: Sequence[int], cfg: int) -> bool:
        return self._sim.success(records, cfg)


class RateAlgorithm:
    name = "base"

    def reset(self, ctx: _Context, rng: np.random.Generator) -> None:
        self.ctx = ctx
        self.rng = rng

    def choose(self, t_us: float) -> int:
        raise NotImplementedError

    def feedback(self, t_us: float, cfg: int, success: bool, records: Sequence[int]) -> None:
        pass


def _fastest_first(space) -> list[int]:
    return sorted(range(len(space)), key=lambda i: selection_key(space[i][0], i))


class Optimal(RateAlgorithm):
    """Knows which configuration the upcoming batch would survive at."""

    name = "optimal"

    def reset(self, ctx, rng):
        super().reset(ctx, rng)
        self.order = _fastest_first(ctx.space)

    def choose(self, t_us):
        for cfg in self.order:
            if self.ctx.batch_success(self.ctx.records_for(t_us, cfg), cfg):
                return cfg
        return self.order[-1]


class DelayedOptimal(RateAlgorithm):
    """Uses the best configuration for the channel the previous batch saw."""

    name = "delayed_optimal"

    def reset(self, ctx, rng):
        super().reset(ctx, rng)
        self.order = _fastest_first(ctx.space)
        self.next_cfg = self.order[-1]

    def choose(self, t_us):
        return self.next_cfg

    def feedback(self, t_us, cfg, success, records):
        self.next_cfg = self.order[-1]
        for c in self.order:
            if self.ctx.batch_success(records, c):
                self.next_cfg = c
                break


class EffectiveSnrSelector(RateAlgorithm):
    """Picks the fastest configuration predicted to work from fed-back CSI.

    After two consecutive failures with an essentially unchanged Effective
    SNR the choice steps down one MCS within the same stream count.
    """

    name = "effsnr"

    def __init__(self, thresholds, fallback_tolerance_db: float = 0.5):
        self.thresholds = thresholds
        self.tolerance = fallback_tolerance_db

    def reset(self, ctx, rng):
        super().reset(ctx, rng)
        self.plan = compile_space(ctx.space)
        self.trace = ctx._sim.trace
        order = _fastest_first(ctx.space)
        self.lowest = order[-1]
        self.predicted: Optional[int] = None
        self.rho_db: Optional[np.ndarray] = None
        self.penalty = 0
        self.failures = 0
        # configurations of the same stream count ordered by MCS index
        self.by_streams: dict[int, list[int]] = {}
        for i, (tx, _) in enumerate(ctx.space):
            self.by_streams.setdefault(tx.mcs.n_streams, []).append(i)
        for lst in self.by_streams.values():
            lst.sort(key=lambda i: (ctx.space[i][0].mcs.index, i))

    def _step_down(self, cfg: int, steps: int) -> int:
        if steps <= 0:
            return cfg
        lst = self.by_streams[self.ctx.space[cfg][0].mcs.n_streams]
        return lst[max(lst.index(cfg) - steps, 0)]

    def choose(self, t_us):
        if self.predicted is None:
            return self.lowest
        return self._step_down(self.predicted, self.penalty)

    def feedback(self, t_us, cfg, success, records):
        csi = self.trace[records[0]]  # first record overlapping the batch
        pred = self.plan.run(csi, self.thresholds)
        best = pred.best_index
        rho = pred.rho_eff_db
        # compare like with like: the configuration just used, before and now
        unchanged = self.rho_db is not None and abs(rho[cfg] - self.rho_db[cfg]) < self.tolerance
        if success:
            self.failures = 0
        else:
            self.failures += 1
        if not unchanged:
            self.penalty = 0
        if self.failures >= 2 and unchanged:
            self.penalty += 1
            self.failures = 0
        self.rho_db = rho
        self.predicted = best if best is not None else self.lowest


class SampleRate(RateAlgorithm):
    """Minstrel-style sampling: delivery statistics per rate, periodic probes.

    Per-rate success ratios are folded into an EWMA every ``interval_us``.
    Normal batches use the best expected-throughput rate; every
    ``probe_every``-th batch tries a random faster rate. After a failure the
    retry walks the chain best throughput, second best, best probability,
    lowest rate (disabled with ``fallback=False``).
    """

    name = "samplerate"

    def __init__(self, fallback: bool = True, probe_every: int = 10,
                 interval_us: float = 100_000.0, ewma_weight: float = 0.75):
        self.fallback = fallback
        self.probe_every = probe_every
        self.interval_us = interval_us
        self.weight = ewma_weight
        if not fallback:
            self.name = "samplerate-nofallback"

    def reset(self, ctx, rng):
        super().reset(ctx, rng)
        n = len(ctx.space)
        self.rates = np.array([tx.mcs.rate_mbps for tx, _ in ctx.space])
        self.airtime = np.array(ctx._sim.durations)
        self.prob = np.full(n, np.nan)
        self.attempts = np.zeros(n)
        self.successes = np.zeros(n)
        self.next_update = self.interval_us
        self.batches = 0
        self.retry = 0
        self.lowest = int(np.argmin(self.rates))
        self.chain = [self.lowest] * 4

    def _update(self, t_us):
        while t_us >= self.next_update:
            seen = self.attempts > 0
            ratio = np.divide(self.successes, self.attempts, out=np.zeros_like(self.attempts),
                              where=seen)
            fresh = seen & np.isnan(self.prob)
            old = seen & ~fresh
            self.prob[fresh] = ratio[fresh]
            self.prob[old] = self.weight * self.prob[old] + (1 - self.weight) * ratio[old]
            self.attempts[:] = 0
            self.successes[:] = 0
            self.next_update += self.interval_us
        self._rank()

    def _rank(self):
        known = ~np.isnan(self.prob)
        if not known.any():
            self.chain = [self.lowest] * 4
            return
        idx = np.flatnonzero(known)
        tp = self.prob[idx] * self.rates[idx]
        by_tp = idx[np.lexsort((self.airtime[idx], -tp))]
        best = int(by_tp[0])
        second = int(by_tp[1]) if len(by_tp) > 1 else best
        by_p = idx[np.lexsort((-self.rates[idx], -self.prob[idx]))]
        self.chain = [best, second, int(by_p[0]), self.lowest]

    def choose(self, t_us):
        self._update(t_us)
        self.batches += 1
        if self.retry and self.fallback:
            return self.chain[min(self.retry, len(self.chain) - 1)]
        if self.batches % self.probe_every == 0:
            faster = np.flatnonzero(self.rates > self.rates[self.chain[0]])
            if faster.size:
                return int(self.rng.choice(faster))
        return self.chain[0]

    def feedback(self, t_us, cfg, success, records):
        self.attempts[cfg] += 1
        self.successes[cfg] += success
        self.retry = 0 if success else self.retry + 1


def make_algorithm(name: str, thresholds=None) -> RateAlgorithm:
    if name == "effsnr":
        if thresholds is None:
            raise ValueError("effsnr needs a threshold table")
        return EffectiveSnrSelector(thresholds)
    if name == "samplerate":
        return SampleRate()
    if name == "samplerate-nofallback":
        return SampleRate(fallback=False)
    if name == "optimal":
        return Optimal()
    if name == "delayed_optimal":
        return DelayedOptimal()
    raise ValueError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")


# ------------------------------------------------------------------ simulator


class _Simulator:
    def __init__(self, trace: ChannelTrace, space, speedup: float, params: MacParams,
                 oracle: RecordOracle):
        self.trace = trace
        self.space = list(space)
        self.params = params
        self.oracle = oracle
        ts = trace.timestamps_us.astype(float)
        self.times = (ts - ts[0]) / speedup
        self.end_us = float(self.times[-1])
        plans = [batch_plan(tx.mcs, params) for tx, _ in self.space]
        self.batch_bytes = [p[0] for p in plans]
        self.durations = [p[1] for p in plans]

    def overlapping(self, t_us: float, duration_us: float) -> list[int]:
        """Record in effect at ``t_us`` plus records arriving before the batch ends."""
        first = max(int(np.searchsorted(self.times, t_us, side="right")) - 1, 0)
        last = int(np.searchsorted(self.times, t_us + duration_us, side="left"))
        return list(range(first, max(last, first + 1)))

    def success(self, records: Sequence[int], cfg: int) -> bool:
        return batch_rule([self.oracle.delivered(r, cfg) for r in records], self.params)


def run_simulation(trace: ChannelTrace, algorithm, thresholds=None, speedup: float = 1.0,
                   seed: int = 0, params: MacParams = MacParams(), space=None,
                   oracle: Optional[RecordOracle] = None,
                   reference_bytes: Optional[int] = None) -> SimResult:
    """Replay ``trace`` with one rate-adaptation algorithm.

    ``algorithm`` is a name from :data:`ALGORITHMS` or a :class:`RateAlgorithm`.
    ``space`` defaults to every MCS the antennas support (first S antennas,
    MMSE receiver). Pass a shared ``oracle`` to give several runs identical
    per-record packet outcomes; ``reference_bytes`` (Optimal's total) fills
    ``fraction_of_optimal``.
    """
    if speedup <= 0:
        raise ValueError("speedup must be positive")
    if space is None:
        space = rate_space(trace.n_tx, trace.n_rx, "all")
    algo = make_algorithm(algorithm, thresholds) if isinstance(algorithm, str) else algorithm
    if oracle is None:
        oracle = RecordOracle(trace, space, params.per_packet_bytes, seed)
    sim = _Simulator(trace, space, speedup, params, oracle)
    rng = np.random.default_rng([seed, 7])
    algo.reset(_Context(sim), np.random.default_rng([seed, 11]))

    events = []
    t = 0.0
    cw = params.cw_min
    total = 0
    while t < sim.end_us:
        cfg = algo.choose(t)
        nbytes, dur = sim.batch_bytes[cfg], sim.durations[cfg]
        records = sim.overlapping(t, dur)
        ok = sim.success(records, cfg)
        delivered = nbytes if ok else 0
        total += delivered
        events.append(SimEvent(t, space[cfg][0].mcs.index, nbytes, ok, delivered))
        algo.feedback(t, cfg, ok, records)
        cw = params.cw_min if ok else min(2 * (cw + 1) - 1, params.cw_max)
        t += dur + params.difs_us + int(rng.integers(0, cw + 1)) * params.slot_us
    duration_s = max(sim.end_us, 1.0) * 1e-6
    frac = None
    if reference_bytes:
        frac = total / reference_bytes
    name = getattr(algo, "name", str(algorithm))
    return SimResult(events, SimSummary(name, speedup, total, duration_s, frac))


def compare_algorithms(trace: ChannelTrace, algorithms: Sequence[str], thresholds=None,
                       speedup: float = 1.0, seed: int = 0, params: MacParams = MacParams(),
                       space=None, oracle: Optional[RecordOracle] = None
                       ) -> dict[str, SimResult]:
    """Run Optimal plus ``algorithms`` on one shared oracle; fills fraction_of_optimal."""
    if space is None:
        space = rate_space(trace.n_tx, trace.n_rx, "all")
    if oracle is None:
        oracle = RecordOracle(trace, space, params.per_packet_bytes, seed)
    kw = dict(thresholds=thresholds, speedup=speedup, seed=seed, params=params, space=space,
              oracle=oracle)
    opt = run_simulation(trace, "optimal", **kw)
    ref = opt.summary.total_bytes
    out = {"optimal": SimResult(opt.events, dataclasses.replace(
        opt.summary, fraction_of_optimal=1.0 if ref else None))}
    for name in algorithms:
        if name != "optimal":
            out[name] = run_simulation(trace, name, reference_bytes=ref, **kw)
    return out


# ------------------------------------------------------------------ export


EVENT_COLUMNS = ("t_us", "mcs", "bytes", "success")


def write_events_csv(events: Sequence[SimEvent], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for e in events:
            w.writerow([f"{e.t_us:.3f}", e.mcs_index, e.batch_bytes, int(e.success)])


def summary_dict(summary: SimSummary) -> dict:
    return {"algorithm": summary.algorithm, "speedup": summary.speedup,
            "total_bytes": summary.total_bytes, "bytes_per_s": summary.bytes_per_s,
            "fraction_of_optimal": summary.fraction_of_optimal}
