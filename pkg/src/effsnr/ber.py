"""Uncoded bit error rate of the 802.11 constellations and its inverse.

Every row has the form ``BER_k(rho) = c_k * Q(sqrt(a_k * rho))`` where ``rho`` is
the linear symbol SNR, so the inverse is closed form through ``Q^-1``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, erfcinv

# bits per symbol -> (coefficient c_k, argument scale a_k)
BER_ROWS = {
    1: (1.0, 2.0),
    2: (1.0, 1.0),
    4: (3.0 / 4.0, 1.0 / 5.0),
    6: (7.0 / 12.0, 1.0 / 21.0),
}

#: Effective BERs below this are clamped before inversion.
BER_FLOOR = 1e-15
# keeps the inverse strictly positive at the upper domain edge
_TOP_MARGIN = 1e-9

_SQRT2 = math.sqrt(2.0)


def _row(k: int) -> tuple[float, float]:
    try:
        return BER_ROWS[k]
    except KeyError:
        raise ValueError(f"unsupported bits per symbol: {k}") from None


def qfunc(x):
    """Gaussian tail probability ``Q(x) = P(Z > x)``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def qinv(p):
    """Inverse of :func:`qfunc` on ``(0, 1)``."""
    return _SQRT2 * erfcinv(2.0 * np.asarray(p, dtype=float))


def ber(k: int, snr_linear):
    """Bit error rate of modulation with ``k`` bits/symbol at linear SNR.

    Accepts scalars or arrays; scalars come back as ``float``.
    """
    c, a = _row(k)
    snr = np.asarray(snr_linear, dtype=float)
    if np.any(snr < 0) or np.any(np.isnan(snr)):
        raise ValueError("SNR must be non-negative")
    out = c * 0.5 * erfc(np.sqrt(a * snr) / _SQRT2)
    return float(out) if out.ndim == 0 else out


def ber_max(k: int) -> float:
    """Largest attainable BER for modulation ``k`` (reached at zero SNR)."""
    return _row(k)[0] * 0.5


def clamp_ber(k: int, beta: float) -> tuple[float, bool]:
    """Clamp ``beta`` into the invertible domain; returns (value, clamped)."""
    top = ber_max(k) * (1.0 - _TOP_MARGIN)
    if beta < BER_FLOOR:
        return BER_FLOOR, True
    if beta > top:
        return top, True
    return float(beta), False


def inv_ber(k: int, beta) -> float:
    """Linear SNR at which :func:`ber` equals ``beta`` (clamped into domain)."""
    c, a = _row(k)
    beta, _ = clamp_ber(k, float(beta))
    x = _SQRT2 * float(erfcinv(2.0 * beta / c))
    return x * x / a
