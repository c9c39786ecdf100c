"""Calibrate the default threshold table from oracle sweeps of synthetic links.

SISO links cover MCS 0-7, 3x3 links MCS 8-23. Writes the table (both metric
domains) plus the raw sweep samples.

    python3 scripts/calibrate_thresholds.py --out src/effsnr/data/default_thresholds.json
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from effsnr.calibration import fit_thresholds, write_samples_csv
from effsnr.experiments import link_ensemble, samples, sweep_ensemble
from effsnr.thresholds import ThresholdTable


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="src/effsnr/data/default_thresholds.json")
    ap.add_argument("--samples", default="results/calibration_samples.csv")
    ap.add_argument("--siso-links", type=int, default=60)
    ap.add_argument("--mimo-links", type=int, default=30)
    ap.add_argument("--packets", type=int, default=20)
    ap.add_argument("--payload", type=int, default=1500)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    t0 = time.time()
    kw = dict(n_packets=args.packets, payload_bytes=args.payload, snr_range_db=(-10.0, 60.0))
    siso = link_ensemble(args.siso_links, args.seed)
    points = sweep_ensemble(siso, range(8), seed=args.seed, **kw)
    print(f"SISO sweep: {len(points)} points, {time.time() - t0:.0f} s", flush=True)
    mimo = link_ensemble(args.mimo_links, args.seed + 1, n_tx=3, n_rx=3)
    points += sweep_ensemble(mimo, range(8, 24), seed=args.seed + 1, **kw)
    print(f"MIMO sweep: {len(points)} points, {time.time() - t0:.0f} s", flush=True)

    eff = fit_thresholds(samples(points, "effective-snr"), packet_len_bytes=args.payload)
    pkt = fit_thresholds(samples(points, "packet-snr"), packet_len_bytes=args.payload)
    table = ThresholdTable(eff.thresholds.thresholds, "mmse, 6-bit ADC", args.payload,
                           pkt.thresholds.thresholds, eff.thresholds.flags)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    table.save(args.out)
    Path(args.samples).parent.mkdir(parents=True, exist_ok=True)
    write_samples_csv(samples(points, "effective-snr"), args.samples)
    for m in sorted(table.thresholds):
        print(f"MCS {m:2d}: effective {table[m]:6.2f} dB (err {eff.fits[m].balanced_error:.2f})"
              f"  packet {table.packet_snr[m]:6.2f} dB (err {pkt.fits[m].balanced_error:.2f})")


if __name__ == "__main__":
    main()
