"""Transition-window widths of Effective SNR and Packet SNR on synthetic SISO links.

For every MCS 0-7, prints the 5-95 and 25-75 percentile widths (dB) of the
metric values at which links sit in transition (10% < PRR < 90%).

    python3 scripts/transition_windows.py --links 300 --out results/transition_windows.csv
"""
from __future__ import annotations

import argparse
import csv
import time

from effsnr.calibration import transition_windows
from effsnr.experiments import link_ensemble, samples, sweep_ensemble


def fmt(x):
    return "-" if x is None else f"{x:.2f}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--links", type=int, default=300)
    ap.add_argument("--taps", type=int, default=8)
    ap.add_argument("--packets", type=int, default=12)
    ap.add_argument("--payload", type=int, default=500)
    ap.add_argument("--seed", type=int, default=404)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    t0 = time.time()
    links = link_ensemble(args.links, args.seed, n_taps=args.taps)
    pts = sweep_ensemble(links, range(8), seed=args.seed, n_packets=args.packets,
                         payload_bytes=args.payload, snr_range_db=(-10.0, 50.0))
    eff = transition_windows(samples(pts, "effective-snr"))
    pkt = transition_windows(samples(pts, "packet-snr"))
    rows = [dict(mcs=m, eff_5_95=eff[m][0], eff_25_75=eff[m][1],
                 pkt_5_95=pkt[m][0], pkt_25_75=pkt[m][1]) for m in range(8)]
    print("mcs  eff 5-95  eff 25-75  pkt 5-95  pkt 25-75")
    for r in rows:
        print(f"{r['mcs']:3d}  {fmt(r['eff_5_95']):>8}  {fmt(r['eff_25_75']):>9}  "
              f"{fmt(r['pkt_5_95']):>8}  {fmt(r['pkt_25_75']):>9}")
    print(f"({len(pts)} sweep points, {time.time() - t0:.0f} s)")
    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
