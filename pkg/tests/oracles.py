"""Independent reference implementations used to check the package.

Everything here is written from the definitions, without importing the
code under test for the computation itself: high-precision Q via mpmath,
per-tone matrix inverses, a shift-register encoder, brute-force scans.
"""
from __future__ import annotations

import math
from collections import defaultdict

import mpmath as mp
import numpy as np

mp.mp.dps = 40

# bits/symbol -> (c, a) with BER = c Q(sqrt(a rho)), written out again on purpose
ROWS = {1: (mp.mpf(1), mp.mpf(2)), 2: (mp.mpf(1), mp.mpf(1)),
        4: (mp.mpf(3) / 4, mp.mpf(1) / 5), 6: (mp.mpf(7) / 12, mp.mpf(1) / 21)}


def q_mp(x):
    return mp.erfc(mp.mpf(x) / mp.sqrt(2)) / 2


def ber_mp(k: int, rho) -> mp.mpf:
    c, a = ROWS[k]
    return c * q_mp(mp.sqrt(a * mp.mpf(rho)))


def inv_ber_mp(k: int, beta) -> float:
    """Root of ber_mp(k, rho) = beta by bracketing on log(rho)."""
    beta = mp.mpf(beta)
    lo, hi = mp.mpf(-40), mp.mpf(20)  # ber decreases in t = log(rho)
    for _ in range(200):
        mid = (lo + hi) / 2
        if ber_mp(k, mp.e ** mid) > beta:
            lo = mid
        else:
            hi = mid
    return float(mp.e ** ((lo + hi) / 2))


def effective_snr_mp(snrs, k: int) -> tuple[float, float]:
    """(beta_eff, rho_eff linear)."""
    beta = mp.fsum(ber_mp(k, s) for s in snrs) / len(snrs)
    return float(beta), inv_ber_mp(k, beta)


# ------------------------------------------------------------------ receivers


def mmse_naive(h: np.ndarray) -> np.ndarray:
    """Per-tone 1/Y_jj - 1 with Y = (H^H H + I)^-1 by explicit inversion."""
    out = []
    for hi in h:
        s = hi.shape[1]
        y = np.linalg.inv(hi.conj().T @ hi + np.eye(s))
        out.append([1.0 / y[j, j].real - 1.0 for j in range(s)])
    return np.array(out)


def mrc_naive(h: np.ndarray) -> np.ndarray:
    return np.array([[sum(abs(x) ** 2 for x in hi[:, 0])] for hi in h])


# ------------------------------------------------------------------ predict


def naive_best(space, rho_db, thresholds):
    """Fastest working config: rate desc, then fewer streams, then lower index."""
    best = None
    for i, ((tx, rx), r) in enumerate(zip(space, rho_db)):
        if r < thresholds[tx.mcs.index]:
            continue
        key = (-tx.mcs.rate_mbps, tx.mcs.n_streams, tx.mcs.index, i)
        if best is None or key < best[0]:
            best = (key, i)
    return None if best is None else best[1]


# ------------------------------------------------------------------ coding


def conv_encode_naive(bits, gens=(0o133, 0o171), k=7):
    """Mother-code output A0 B0 A1 B1 ... with 6 zero tail bits."""
    reg = [0] * k
    out = []
    taps = [[(g >> (k - 1 - j)) & 1 for j in range(k)] for g in gens]
    for b in list(bits) + [0] * (k - 1):
        reg = [int(b)] + reg[:-1]
        for t in taps:
            out.append(sum(x & y for x, y in zip(reg, t)) % 2)
    return np.array(out, dtype=np.uint8)


# ------------------------------------------------------------------ calibration


def threshold_scan_naive(good, bad):
    """Exhaustive scan over observed values and midpoints."""
    vals = sorted(set(good) | set(bad))
    cand = sorted(set(vals) | {(a + b) / 2 for a, b in zip(vals, vals[1:])})
    best = None
    for t in cand:
        fn = sum(g < t for g in good) / len(good)
        fp = sum(b >= t for b in bad) / len(bad)
        gap = round(abs(fn - fp), 12)
        if best is None or gap < best[0]:
            best = (gap, t, max(fn, fp))
    return best[1], best[2]


def curve_naive(points, bin_db=1.0, min_count=3):
    bins = defaultdict(list)
    for s, v in points:
        bins[math.floor(s / bin_db)].append(v)
    kept = [(b * bin_db, float(np.median(v))) for b, v in sorted(bins.items()) if len(v) >= min_count]

    def f(x):
        val, top = 0.0, -math.inf
        for edge, med in kept:
            top = max(top, med)
            if x >= edge:
                val = top
        return val
    return f


# ------------------------------------------------------------------ network


def relay_bruteforce(direct, hops, gate=1.2):
    """Relay choice by enumerating every candidate path.

    ``direct`` is the direct bitrate, ``hops`` maps relay -> (b1, b2).
    Returns (relay or None, path rate).
    """
    best, best_rate = None, 0.0
    for r, (b1, b2) in hops.items():
        t = (math.inf if b1 <= 0 else 1 / b1) + (math.inf if b2 <= 0 else 1 / b2)
        rate = 0.0 if math.isinf(t) else 1 / t
        if rate > best_rate:
            best, best_rate = r, rate
    if best is not None and best_rate >= gate * direct:
        return best, best_rate
    return None, best_rate


def pearson_naive(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return 1.0 if list(x) == list(y) else 0.0
    return sxy / math.sqrt(sxx * syy)
