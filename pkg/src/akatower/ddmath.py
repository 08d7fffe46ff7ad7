"""Accurate ``frac(q * theta)`` for large integer ``q`` and float ``theta``.

A plain double product loses about ``log2(q)`` bits of the fractional part.
Below ``2**20`` that is harmless; up to ``2**53`` an error-free two-product
(Dekker/Veltkamp splitting) recovers the lost low part; beyond that the
float ``theta`` is expanded to its exact dyadic value and reduced with
Python integers.
"""

from __future__ import annotations

import math

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    """``(p, e)`` with ``p = fl(a*b)`` and ``a*b = p + e`` exactly."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def frac_mul(q: int, theta) -> np.ndarray:
    """``q*theta mod 1`` in ``[0, 1)``, accurate to a few ulps of 1."""
    theta = np.asarray(theta, dtype=float)
    q = int(q)
    if abs(q) < 2 ** 20:
        return np.mod(q * theta, 1.0)
    if abs(q) < 2 ** 53:
        p, e = two_prod(float(q), theta)
        f = p - np.floor(p)
        return np.mod(f + e, 1.0)
    flat = theta.ravel()
    out = np.empty_like(flat)
    for i, t in enumerate(flat):
        num, den = float(t).as_integer_ratio()
        out[i] = ((q * num) % den) / den
    return out.reshape(theta.shape)


def cos2pi_qtheta(q: int, theta, shift: float = 0.0):
    """``cos(2 pi (q theta + shift))`` with the phase reduced accurately."""
    return np.cos(2.0 * math.pi * np.mod(frac_mul(q, theta) + shift, 1.0))


def sin2pi_qtheta(q: int, theta, shift: float = 0.0):
    return np.sin(2.0 * math.pi * np.mod(frac_mul(q, theta) + shift, 1.0))
