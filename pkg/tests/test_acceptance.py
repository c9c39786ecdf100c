"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion NN PASS|FAIL`` line (collected into the
terminal summary) before asserting, so the report lists every criterion even
when some fail.
"""
import dataclasses
import math
import time

import numpy as np

import oracles
from conftest import ACCEPTANCE_LINES
from effsnr import default_thresholds, predict
from effsnr.ber import BER_FLOOR, ber, inv_ber
from effsnr.calibration import fit_thresholds, transition_windows
from effsnr.channel import ChannelGenSpec, apply_gain_profile, generate_trace, random_walk_db
from effsnr.coding import PUNCTURE_PATTERNS, conv_encode, viterbi_decode
from effsnr.csi import flat_csi
from effsnr.experiments import (link_ensemble, packet_snr_choice, samples, sweep_ensemble,
                                varied_ensemble)
from effsnr.linksim import RecordOracle, SampleRate, compare_algorithms, run_simulation
from effsnr.model import (EffectiveCsi, RxConfig, config_snrs, effective_snr, rate_space,
                          selection_key, subchannel_snrs)
from effsnr.netconfig import (EFFECTIVE_SNR_BITRATE, PACKET_SNR, MobilityState,
                              classify_mobility, fit_snr_throughput_curve, link_bitrate,
                              select_relay, trim_power, two_hop_mbps)
from effsnr.phy import measure_prr, prr_from_snrs
from effsnr.thresholds import ThresholdTable


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:02d} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def db(x):
    return 10.0 * math.log10(x)


# ------------------------------------------------------------------ 1

TABLE_PAIRS = [(1, 9.7, 8e-6), (2, 10.9, 2e-4), (4, 13.9, 1e-2), (6, 16.1, 5e-2)]


def test_criterion_01_ber_table_roundtrip():
    # tolerance box: the BER curve passes within 0.15 dB and 10% of each printed pair
    worst = []
    ok = True
    for k, rho_db, beta in TABLE_PAIRS:
        lo = ber(k, 10 ** ((rho_db - 0.15) / 10))
        hi = ber(k, 10 ** ((rho_db + 0.15) / 10))
        inside = hi <= 1.1 * beta and lo >= 0.9 * beta
        d_db = db(inv_ber(k, beta)) - rho_db
        rel = ber(k, 10 ** (rho_db / 10)) / beta - 1
        ok &= inside
        worst.append(f"k={k}: inv {d_db:+.3f} dB, fwd {100 * rel:+.1f}%")
    report(1, ok, "; ".join(worst))


# ------------------------------------------------------------------ 2

def test_criterion_02_flat_identity():
    rng = np.random.default_rng(2)
    worst = 0.0
    for k in (1, 2, 4, 6):
        top = db(inv_ber(k, 2 * BER_FLOOR)) - 0.5  # above this the BER floor clamps
        for _ in range(100):
            rho_db = rng.uniform(-5.0, top)
            n_sub = int(rng.choice([52, 56, 108, 114]))
            r = effective_snr(np.full(n_sub, 10 ** (rho_db / 10)), k)
            worst = max(worst, abs(r.rho_eff_db - rho_db))
    report(2, worst < 1e-4, f"max |rho_eff - rho| = {worst:.2e} dB over 400 flat channels")


# ------------------------------------------------------------------ 3

def test_criterion_03_mmse_reductions():
    rng = np.random.default_rng(3)
    plain = RxConfig(adc_bits=None)
    mrc = RxConfig(combiner="mrc", adc_bits=None)
    worst = 0.0
    for _ in range(1000):
        scale = 10 ** (rng.uniform(-10, 40) / 20) / math.sqrt(2)
        h = scale * (rng.standard_normal((56, 3, 1)) + 1j * rng.standard_normal((56, 3, 1)))
        a = subchannel_snrs(EffectiveCsi(h), plain)
        b = subchannel_snrs(EffectiveCsi(h), mrc)
        worst = max(worst, float(np.max(np.abs(a / b - 1))))
    h = math.sqrt(10) * np.array([[1, 1], [0, 1]], dtype=complex)
    got = subchannel_snrs(EffectiveCsi(h[None]), plain)
    hand = float(np.max(np.abs(got / np.array([110 / 21, 120 / 11]) - 1)))
    report(3, worst < 1e-9 and hand < 1e-12,
           f"MMSE/MRC max rel diff {worst:.1e}; 2x2 hand case rel err {hand:.1e}")


# ------------------------------------------------------------------ 4

def test_criterion_04_transition_windows():
    t0 = time.time()
    links = link_ensemble(300, 404, n_taps=8, delay_spread_samples=3.0)
    pts = sweep_ensemble(links, range(8), seed=404, n_packets=12, payload_bytes=500,
                         snr_range_db=(-10.0, 50.0))
    eff = transition_windows(samples(pts, "effective-snr"))
    pkt = transition_windows(samples(pts, "packet-snr"))
    widths = [(m, eff[m][1], pkt[m][1]) for m in range(8)]
    narrower = all(e is not None and p is not None and e < p for _, e, p in widths)
    avg = float(np.mean([e for _, e, _ in widths]))
    detail = ", ".join(f"MCS{m} {e:.2f}/{p:.2f}" for m, e, p in widths)
    report(4, narrower and avg <= 2.5,
           f"25-75 widths eff/pkt dB: {detail}; eff mean {avg:.2f} dB ({time.time() - t0:.0f} s)")


# ------------------------------------------------------------------ 5

def test_criterion_05_rate_selection_accuracy():
    t0 = time.time()
    train = varied_ensemble(30, 11)
    pts = sweep_ensemble(train, range(24), seed=11, n_packets=12, payload_bytes=1500,
                         snr_range_db=(-10.0, 60.0))
    eff_table = fit_thresholds(samples(pts, "effective-snr")).thresholds
    pkt_table = fit_thresholds(samples(pts, "packet-snr")).thresholds.thresholds

    held_out = varied_ensemble(150, 12, gain_db=(-10.0, 25.0))
    space = rate_space(3, 3)
    order = sorted(range(len(space)), key=lambda i: selection_key(space[i][0], i))
    r_eff, r_pkt = [], []
    for li, csi in enumerate(held_out):
        cache = {}

        def tput(i):
            if i is None:
                return 0.0
            if i not in cache:
                tx, rx = space[i]
                prr = prr_from_snrs(config_snrs(csi, tx, rx), tx.mcs, 10, 1500, [li, i])
                cache[i] = tx.mcs.rate_mbps * prr
            return cache[i]
        best = 0.0
        for i in order:
            if space[i][0].mcs.rate_mbps <= best:
                break
            best = max(best, tput(i))
        if best == 0.0:
            continue
        r_eff.append(tput(predict(csi, space, eff_table).best_index) / best)
        r_pkt.append(tput(packet_snr_choice(csi, space, pkt_table)) / best)
    med_e, med_p = float(np.median(r_eff)), float(np.median(r_pkt))
    report(5, med_e >= 0.7 and med_p < med_e,
           f"median fraction of optimal: effective {med_e:.3f}, packet {med_p:.3f} "
           f"(means {np.mean(r_eff):.3f}/{np.mean(r_pkt):.3f}, {len(r_eff)} links, "
           f"{time.time() - t0:.0f} s)")


# ------------------------------------------------------------------ 6

SPEEDUPS = (1, 4, 16, 64)


def mobile_mimo_trace():
    spec = ChannelGenSpec(seed=7, n_tx=3, n_rx=3, n_taps=8, delay_spread_samples=3.0,
                          mean_snr_db=22.0, doppler_coeff=0.995, n_records=4000,
                          interval_us=4000)
    trace = generate_trace(spec)
    return apply_gain_profile(trace, random_walk_db(len(trace), 4.0, 0.99, 8))


def test_criterion_06_simulator_trends():
    t0 = time.time()
    trace = mobile_mimo_trace()
    table = default_thresholds()
    space = rate_space(3, 3)
    oracle = RecordOracle(trace, space, 1500, 0)
    frac = {k: [] for k in ("delayed_optimal", "effsnr", "samplerate", "nofallback")}
    for s in SPEEDUPS:
        res = compare_algorithms(trace, ["delayed_optimal", "effsnr", "samplerate"], table,
                                 speedup=s, seed=1, space=space, oracle=oracle)
        ref = res["optimal"].summary.total_bytes
        nf = run_simulation(trace, SampleRate(fallback=False), table, speedup=s, seed=1,
                            space=space, oracle=oracle, reference_bytes=ref)
        for k in ("delayed_optimal", "effsnr", "samplerate"):
            frac[k].append(res[k].summary.fraction_of_optimal)
        frac["nofallback"].append(nf.summary.fraction_of_optimal)
    eff, dly, sr, nf = (np.array(frac[k]) for k in
                        ("effsnr", "delayed_optimal", "samplerate", "nofallback"))
    tracks = bool(np.all(np.abs(eff - dly) <= 0.15))
    monotone = bool(np.all(np.diff(sr) <= 0))
    gap = bool(eff[-1] - sr[-1] >= 0.20)
    fallback = bool(np.all(nf[1:] < sr[1:]))
    fmt = lambda a: "/".join(f"{x:.3f}" for x in a)  # noqa: E731
    report(6, tracks and monotone and gap and fallback,
           f"speedups {SPEEDUPS}: effsnr {fmt(eff)}, delayed {fmt(dly)}, samplerate {fmt(sr)}, "
           f"no-fallback {fmt(nf)} [track={tracks} monotone={monotone} gap={gap} "
           f"fallback={fallback}] ({time.time() - t0:.0f} s)")


# ------------------------------------------------------------------ 7

def test_criterion_07_power_trimming():
    t0 = time.time()
    table = default_thresholds()
    links = link_ensemble(100, 707)
    gains = np.random.default_rng(707).uniform(0.0, 25.0, len(links))
    space = rate_space(1, 1)
    kept = total = 0
    offsets = []
    for i, (csi, g) in enumerate(zip(links, gains)):
        csi = csi.scaled(float(g))
        res = trim_power(csi, table, space)
        if res.baseline_mcs is None:
            continue
        tx, rx = space[predict(csi, space, table).best_index]
        if measure_prr(csi, tx, rx, 100, 1500, seed=[i, 0]) < 0.9:
            continue  # nothing to preserve
        trimmed = dataclasses.replace(tx, power_offset_db=res.offset_db)
        total += 1
        kept += measure_prr(csi, trimmed, rx, 100, 1500, seed=[i, 1]) >= 0.9
        offsets.append(res.offset_db)
    frac = kept / total
    report(7, frac >= 0.9,
           f"PRR >= 0.9 kept after trimming on {kept}/{total} links ({100 * frac:.0f}%), "
           f"median offset {np.median(offsets):.0f} dB ({time.time() - t0:.0f} s)")


# ------------------------------------------------------------------ 8

def relay_fixture(n_cases=200, seed=8):
    rng = np.random.default_rng(seed)
    for case in range(n_cases):
        csi = {}
        for pair in (("s", "d"), ("s", "r"), ("r", "d")):
            if rng.random() < 0.1:
                csi[pair] = None
                continue
            spec = ChannelGenSpec(seed=int(rng.integers(2 ** 32)), n_tx=3, n_rx=3, n_taps=8,
                                  delay_spread_samples=float(rng.uniform(0.5, 5.0)),
                                  mean_snr_db=float(rng.uniform(-5.0, 40.0)), n_records=1)
            csi[pair] = generate_trace(spec)[0]
        yield case, csi


def test_criterion_08_relay_gate():
    table = default_thresholds()
    pts = [(float(s), float(40 + 4 * s)) for s in np.arange(-5, 45, 0.3)]
    curve = fit_snr_throughput_curve(pts)
    mismatches = 0
    for case, csi in relay_fixture():
        for kind in (EFFECTIVE_SNR_BITRATE, PACKET_SNR):
            def rate(pair):
                c = csi[pair]
                if c is None:
                    return 0.0
                if kind == PACKET_SNR:
                    return curve(c.packet_snr_db())
                return predict(c, rate_space(3, 3), table).best_rate_mbps
            want, _ = oracles.relay_bruteforce(rate(("s", "d")),
                                               {"r": (rate(("s", "r")), rate(("r", "d")))})
            got = select_relay("s", "d", ["r"], csi, kind, table, curve).chosen
            mismatches += got != want
    hops = {("s", "d"): flat_csi(3.0, 3, 3), ("s", "r"): flat_csi(40.0, 3, 3),
            ("r", "d"): flat_csi(40.0, 3, 3)}
    easy = ThresholdTable({m: 0.0 for m in range(24)})
    est = select_relay("s", "d", ["r"], hops, EFFECTIVE_SNR_BITRATE, easy)
    identity = (two_hop_mbps(195.0, 195.0) == 97.5 and math.isclose(1 / est.t_relay["r"], 97.5)
                and link_bitrate(hops[("s", "r")], easy) == 195.0)
    report(8, mismatches == 0 and identity,
           f"{mismatches} mismatches over 200 cases x 2 metrics; 97.5 Mbps identity {identity}")


# ------------------------------------------------------------------ 9

def mobility_fixture():
    base = dict(n_tx=2, n_rx=2, n_taps=8, delay_spread_samples=3.0, n_records=100,
                interval_us=4000)
    for i in range(20):
        yield MobilityState.STATIC, ChannelGenSpec(seed=900 + i, mobile_taps=0, **base)
    for i in range(20):
        yield MobilityState.ENVIRONMENT_MOBILE, ChannelGenSpec(
            seed=920 + i, doppler_coeff=0.995, mobile_taps=2, **base)
    for i in range(20):
        yield MobilityState.DEVICE_MOBILE, ChannelGenSpec(seed=940 + i, doppler_coeff=0.99,
                                                          **base)


def test_criterion_09_mobility():
    correct = 0
    scale_ok = True
    for want, spec in mobility_fixture():
        recs = list(generate_trace(spec).records)
        res = classify_mobility(recs)
        correct += res.state is want
        scaled = classify_mobility([r.replace(matrices=r.matrices * 3.7) for r in recs])
        exact = classify_mobility([r.replace(matrices=r.matrices * 0.25) for r in recs])
        scale_ok &= scaled.state is res.state and exact.c_min == res.c_min
    report(9, correct / 60 >= 0.95 and scale_ok,
           f"{correct}/60 labels correct; scale invariance {scale_ok}")


# ------------------------------------------------------------------ 10

def test_criterion_10_hot_path():
    rng = np.random.default_rng(10)
    h = (rng.standard_normal((56, 3, 3)) + 1j * rng.standard_normal((56, 3, 3))) * 7.0
    from effsnr.csi import CsiMeasurement
    csi = CsiMeasurement.from_matrices(h)
    space = rate_space(3, 3)
    table = default_thresholds()
    for _ in range(50):
        predict(csi, space, table).best_index
    times = []
    for _ in range(3000):
        t = time.perf_counter()
        predict(csi, space, table).best_index
        times.append(time.perf_counter() - t)
    med = float(np.median(times)) * 1e6
    report(10, med < 100.0, f"median {med:.1f} us per 24-config prediction (3x3x56)")


# ------------------------------------------------------------------ 11

def test_criterion_11_coding():
    rng = np.random.default_rng(11)
    roundtrip = True
    for rate in PUNCTURE_PATTERNS:
        for n in (1, 100, 12000):
            bits = rng.integers(0, 2, n, dtype=np.uint8)
            soft = 1.0 - 2.0 * conv_encode(bits, rate)
            roundtrip &= bool(np.array_equal(viterbi_decode(soft, rate), bits))
    errors = 0
    for seed in range(1000):
        r = np.random.default_rng(seed)
        bits = r.integers(0, 2, 12000, dtype=np.uint8)
        coded = conv_encode(bits)
        flips = (r.random(coded.size) < 1e-3).astype(np.uint8)
        errors += not np.array_equal(viterbi_decode(1.0 - 2.0 * (coded ^ flips)), bits)
    per = errors / 1000
    report(11, roundtrip and per < 1e-3,
           f"noiseless round-trip all rates {roundtrip}; BSC(1e-3) packet errors {errors}/1000")
