"""Compiled inner loops for the prediction hot path."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

SELECTION, MRC, MMSE = 0, 1, 2


# erfc beyond this argument is < 2e-45: far below the BER clamp, and skipping
# it avoids subnormal arithmetic, which is very slow
ERFC_CUTOFF = 10.0


@njit(cache=True)
def _mmse_snrs(hp, n, s, out):
    """Per-stream ``1/Y_jj - 1`` with ``Y = (H^H H + I)^-1`` for S <= 3 via cofactors."""
    # Gram entries, real diagonal
    g00 = 1.0
    g11 = 1.0
    g22 = 1.0
    g01 = 0j
    g02 = 0j
    g12 = 0j
    for r in range(n):
        a = hp[r, 0]
        g00 += a.real * a.real + a.imag * a.imag
        if s > 1:
            b = hp[r, 1]
            g11 += b.real * b.real + b.imag * b.imag
            g01 += a.conjugate() * b
            if s > 2:
                c = hp[r, 2]
                g22 += c.real * c.real + c.imag * c.imag
                g02 += a.conjugate() * c
                g12 += b.conjugate() * c
    if s == 1:
        out[0] = g00 - 1.0
        return
    m01 = g01.real * g01.real + g01.imag * g01.imag
    if s == 2:
        det = g00 * g11 - m01
        out[0] = det / g11 - 1.0
        out[1] = det / g00 - 1.0
        return
    m02 = g02.real * g02.real + g02.imag * g02.imag
    m12 = g12.real * g12.real + g12.imag * g12.imag
    det = (g00 * g11 * g22 + 2.0 * (g01 * g12 * g02.conjugate()).real
           - g00 * m12 - g11 * m02 - g22 * m01)
    out[0] = det / (g11 * g22 - m12) - 1.0
    out[1] = det / (g00 * g22 - m02) - 1.0
    out[2] = det / (g00 * g11 - m01) - 1.0


@njit(cache=True)
def group_ber_sums(h, rows, cols, t0, t1, v, combiner, adc_ceiling, ml_gain, half_a, out):
    """Sum over tones/streams of erfc(sqrt(rho * a / 2)) for every ``a`` in ``half_a``.

    ``v`` is (1 or T, M', S) with power scaling folded in. Returns the
    number of subchannels summed.
    """
    n = rows.shape[0]
    m = cols.shape[0]
    s = v.shape[2]
    per_tone = v.shape[0] > 1
    n_mod = half_a.shape[0]
    for q in range(n_mod):
        out[q] = 0.0
    hp = np.empty((n, s), dtype=np.complex128)
    snr = np.empty(s)

    best = 0
    if combiner == SELECTION:
        best_pow = -1.0
        for r in range(n):
            tot = 0.0
            for t in range(t0, t1):
                vt = t - t0 if per_tone else 0
                acc = 0j
                for k in range(m):
                    acc += h[t, rows[r], cols[k]] * v[vt, k, 0]
                tot += acc.real * acc.real + acc.imag * acc.imag
            if tot > best_pow:
                best_pow = tot
                best = r

    for t in range(t0, t1):
        vt = t - t0 if per_tone else 0
        for r in range(n):
            for j in range(s):
                acc = 0j
                for k in range(m):
                    acc += h[t, rows[r], cols[k]] * v[vt, k, j]
                hp[r, j] = acc
        if combiner == SELECTION:
            z = hp[best, 0]
            snr[0] = z.real * z.real + z.imag * z.imag
        else:
            _mmse_snrs(hp, n, s, snr)
        for j in range(s):
            rho = snr[j]
            if rho < 0.0:
                rho = 0.0
            if adc_ceiling > 0.0:
                rho = rho * adc_ceiling / (rho + adc_ceiling)
            rho *= ml_gain
            for q in range(n_mod):
                x = math.sqrt(rho * half_a[q])
                if x < ERFC_CUTOFF:
                    out[q] += math.erfc(x)
    return (t1 - t0) * s


@njit(cache=True)
def awgn_llr(bits, k, axis_bits, levels, labels, grid, noise):
    """Modulate ``bits``, add noise at per-slot SNR ``grid``, return max-log LLRs.

    Symbol ``i`` uses SNR ``grid[i % len(grid)]`` and unit-variance Gaussian
    pairs ``noise[i]``; ``levels`` are scaled PAM points with Gray
    ``labels`` (n_levels, axis_bits). Zero SNR yields erasures.
    """
    n_sym = bits.shape[0] // k
    n_axes = 1 if k == 1 else 2
    n_lev = levels.shape[0]
    llr = np.empty(bits.shape[0])
    d2 = np.empty(n_lev)
    for i in range(n_sym):
        rho = grid[i % grid.shape[0]]
        base = i * k
        if rho <= 0.0:
            for j in range(k):
                llr[base + j] = 0.0
            continue
        n0 = 1.0 / rho
        sigma = math.sqrt(n0 / 2.0)
        for ax in range(n_axes):
            off = base + ax * axis_bits
            # Gray label -> level index
            g = 0
            for j in range(axis_bits):
                g = (g << 1) | bits[off + j]
            idx = g
            sh = g >> 1
            while sh:
                idx ^= sh
                sh >>= 1
            y = levels[idx] + sigma * noise[i, ax]
            for l in range(n_lev):
                d = y - levels[l]
                d2[l] = d * d
            for j in range(axis_bits):
                m0 = 1e300
                m1 = 1e300
                for l in range(n_lev):
                    if labels[l, j] == 0:
                        if d2[l] < m0:
                            m0 = d2[l]
                    elif d2[l] < m1:
                        m1 = d2[l]
                llr[off + j] = (m1 - m0) / n0
    return llr


@njit(cache=True)
def conv_encode_mother(u, taps_a, taps_b):
    """Rate-1/2 mother code of ``u`` (tail included by caller), A/B interleaved."""
    n = u.shape[0]
    kl = taps_a.shape[0]
    out = np.empty(2 * n, dtype=np.uint8)
    for i in range(n):
        a = 0
        b = 0
        for d in range(kl):
            if i - d >= 0 and u[i - d]:
                a ^= taps_a[d]
                b ^= taps_b[d]
        out[2 * i] = a
        out[2 * i + 1] = b
    return out
