"""Bessel functions J_m, Y_0, derivatives, and zeros, self-contained.

Evaluation strategy: ascending power series below x = 14, Hankel-type
asymptotic expansions above.  The crossover keeps both branches below
~5e-12 absolute error in double precision (the series by bounding the
largest term, the expansion by truncating while terms still decrease).
Orders m >= 2 use the direct series for small x, upward recurrence from
J_0, J_1 in the oscillatory regime m <= 0.75 x, and Miller's normalized
downward recurrence otherwise.

Zeros are found by a sign-change scan (step pi/8, smaller than any gap
between consecutive zeros) followed by bisection to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_CROSS = 14.0
_EULER = 0.57721566490153286060651209008240243


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, (arr.ndim == 0)


def _j0_series(x):
    q = 0.25 * x * x
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for k in range(1, 60):
        term = term * (-q) / (k * k)
        acc += term
        if np.max(np.abs(term)) < 1e-18:
            break
    return acc


def _j1_series(x):
    q = 0.25 * x * x
    term = np.full_like(x, 0.5) * x
    acc = term.copy()
    for k in range(1, 60):
        term = term * (-q) / (k * (k + 1))
        acc += term
        if np.max(np.abs(term)) < 1e-18:
            break
    return acc


def _jm_series(m, x):
    # J_m(x) = sum_k (-1)^k (x/2)^(m+2k) / (k! (m+k)!)
    q = 0.25 * x * x
    with np.errstate(divide="ignore"):
        logw = m * np.log(np.where(x > 0, 0.5 * x, 1.0))
    from math import lgamma

    term = np.where(x > 0, np.exp(logw - lgamma(m + 1)), 0.0)
    acc = term.copy()
    for k in range(1, 80):
        term = term * (-q) / (k * (m + k))
        acc += term
        if np.max(np.abs(term)) < 1e-18:
            break
    return acc


def _y0_series(x):
    q = 0.25 * x * x
    term = np.ones_like(x)
    acc = np.zeros_like(x)
    h = 0.0
    for k in range(1, 70):
        term = term * (-q) / (k * k)
        h += 1.0 / k
        acc += -term * h  # (-1)^(k+1) H_k q^k / (k!)^2
        if np.max(np.abs(term)) < 1e-18:
            break
    return (2.0 / np.pi) * ((np.log(0.5 * x) + _EULER) * _j0_series(x) + acc)


def _pq_asymptotic(m, x):
    """P, Q sums of the Hankel expansion for order m (x >= _CROSS)."""
    mu = 4.0 * m * m
    a = np.ones_like(x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    sign = 1.0
    for j in range(1, 21):
        a = a * (mu - (2 * j - 1) ** 2) / (8.0 * j * x)
        if j % 2 == 1:
            q += sign * a
        else:
            sign = -sign
            p += sign * a
    return p, q


def _j0_asym(x):
    p, q = _pq_asymptotic(0, x)
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _j1_asym(x):
    p, q = _pq_asymptotic(1, x)
    chi = x - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _y0_asym(x):
    p, q = _pq_asymptotic(0, x)
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.sin(chi) + q * np.cos(chi))


def _split(x, small_fn, large_fn):
    out = np.empty_like(x)
    lo = x < _CROSS
    if np.any(lo):
        out[lo] = small_fn(x[lo])
    if np.any(~lo):
        out[~lo] = large_fn(x[~lo])
    return out


def _miller(m, x):
    """Normalized downward recurrence; x > 0 in the regime m > 0.75 x."""
    M = m + int(np.sqrt(40.0 * max(m, 1))) + 20
    fp = np.zeros_like(x)  # f_{k+1}
    fc = np.full_like(x, 1e-30)  # f_k, starting at k = M
    jm = np.zeros_like(x)
    norm = np.zeros_like(x)
    if M == m:
        jm = fc.copy()
    for k in range(M, 0, -1):
        fm = (2.0 * k / x) * fc - fp
        fp, fc = fc, fm
        kk = k - 1
        if kk == m:
            jm = fc.copy()
        if kk > 0 and kk % 2 == 0:
            norm += 2.0 * fc
        big = np.abs(fc) > 1e250
        if np.any(big):
            for arr in (fp, fc, jm, norm):
                arr[big] *= 1e-250
    norm += fc  # f_0
    return jm / norm


def bessel_j0(x):
    x, scalar = _as_array(x)
    if np.any(x < 0):
        raise ValidationError("bessel_j0 requires x >= 0")
    out = _split(x, _j0_series, _j0_asym)
    return float(out) if scalar else out


def bessel_j1(x):
    x, scalar = _as_array(x)
    if np.any(x < 0):
        raise ValidationError("bessel_j1 requires x >= 0")
    out = _split(x, _j1_series, _j1_asym)
    return float(out) if scalar else out


def bessel_j(m: int, x):
    """J_m(x) for integer m >= 0 and x >= 0 (scalar or array)."""
    if m < 0:
        raise ValidationError(f"order must be non-negative, got {m}")
    if m == 0:
        return bessel_j0(x)
    if m == 1:
        return bessel_j1(x)
    x, scalar = _as_array(x)
    if np.any(x < 0):
        raise ValidationError("bessel_j requires x >= 0")
    out = np.empty_like(x)
    small = x < _CROSS
    if np.any(small):
        out[small] = _jm_series(m, x[small])
    big = ~small
    if np.any(big):
        xb = x[big]
        res = np.empty_like(xb)
        up = m <= 0.75 * xb
        if np.any(up):
            xu = xb[up]
            jp, jc = _j0_asym(xu), _j1_asym(xu)
            for k in range(1, m):
                jp, jc = jc, (2.0 * k / xu) * jc - jp
            res[up] = jc
        if np.any(~up):
            res[~up] = _miller(m, xb[~up])
        out[big] = res
    return float(out) if scalar else out


def bessel_y0(x):
    """Y_0(x) for x > 0 (scalar or array)."""
    x, scalar = _as_array(x)
    if np.any(x <= 0):
        raise ValidationError("bessel_y0 requires x > 0")
    out = _split(x, _y0_series, _y0_asym)
    return float(out) if scalar else out


def bessel_j_prime(m: int, x):
    """d/dx J_m(x)."""
    if m == 0:
        j1 = bessel_j1(x)
        return -j1
    xa, scalar = _as_array(x)
    out = 0.5 * (bessel_j(m - 1, xa) - bessel_j(m + 1, xa))
    return float(out) if scalar else out


@dataclass(frozen=True)
class BesselZeroTable:
    order: int
    zeros: np.ndarray

    @property
    def count(self) -> int:
        return self.zeros.size


def bessel_zeros(m: int, count: int) -> BesselZeroTable:
    """First `count` positive zeros of J_m, strictly increasing."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    step = np.pi / 8.0  # smaller than the gap between consecutive zeros
    start = max(0.5, 0.9 * m)
    los, his = [], []
    x_prev = start
    f_prev = bessel_j(m, np.array([x_prev]))[0]
    chunk = 512
    guard = 0
    while len(los) < count:
        guard += 1
        if guard > 200:
            raise RuntimeError("bessel zero scan failed to bracket enough zeros")
        grid = x_prev + step * np.arange(1, chunk + 1)
        vals = bessel_j(m, grid)
        f = np.concatenate(([f_prev], vals))
        xg = np.concatenate(([x_prev], grid))
        flips = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
        for i in flips:
            los.append(xg[i])
            his.append(xg[i + 1])
            if len(los) == count:
                break
        x_prev = grid[-1]
        f_prev = vals[-1]
    lo = np.array(los)
    hi = np.array(his)
    flo = bessel_j(m, lo)
    for _ in range(75):
        mid = 0.5 * (lo + hi)
        fm = bessel_j(m, mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    roots = 0.5 * (lo + hi)
    return BesselZeroTable(m, roots)
