"""Fraction of Optimal throughput versus mobility speedup on a synthetic 3x3 trace.

Runs delayed_optimal, effsnr, samplerate and samplerate without retry
fallback over the same Gauss-Markov trace at each speedup.

    python3 scripts/simulator_trends.py --records 4000 --out results/simulator_trends.csv
"""
from __future__ import annotations

import argparse
import csv
import time

from effsnr import default_thresholds
from effsnr.channel import ChannelGenSpec, apply_gain_profile, generate_trace, random_walk_db
from effsnr.linksim import RecordOracle, SampleRate, compare_algorithms, run_simulation
from effsnr.model import rate_space

ALGOS = ("delayed_optimal", "effsnr", "samplerate")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--records", type=int, default=4000)
    ap.add_argument("--doppler", type=float, default=0.995)
    ap.add_argument("--snr", type=float, default=22.0)
    ap.add_argument("--shadow-std", type=float, default=4.0)
    ap.add_argument("--speedups", default="1,4,16,64")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    t0 = time.time()
    spec = ChannelGenSpec(seed=args.seed, n_tx=3, n_rx=3, n_taps=8, delay_spread_samples=3.0,
                          mean_snr_db=args.snr, doppler_coeff=args.doppler,
                          n_records=args.records, interval_us=4000)
    trace = generate_trace(spec)
    trace = apply_gain_profile(trace, random_walk_db(len(trace), args.shadow_std, 0.99,
                                                     args.seed + 1))
    table = default_thresholds()
    space = rate_space(3, 3)
    oracle = RecordOracle(trace, space, 1500, 0)
    rows = []
    for s in (float(x) for x in args.speedups.split(",")):
        res = compare_algorithms(trace, ALGOS, table, speedup=s, seed=1, space=space,
                                 oracle=oracle)
        nf = run_simulation(trace, SampleRate(fallback=False), table, speedup=s, seed=1,
                            space=space, oracle=oracle,
                            reference_bytes=res["optimal"].summary.total_bytes)
        row = {"speedup": s}
        row.update({k: round(res[k].summary.fraction_of_optimal, 4) for k in ALGOS})
        row["samplerate_nofallback"] = round(nf.summary.fraction_of_optimal, 4)
        rows.append(row)
        print(row, f"{time.time() - t0:.0f} s", flush=True)
    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
