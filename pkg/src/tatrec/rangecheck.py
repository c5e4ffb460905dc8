"""Range conditions for circular mean data on the unit disk.

Three necessary conditions decide whether projections are consistent with
spherical means of some function supported in the unit disk:

* moment condition: M_k(theta) = int t^(2k+1) g(theta, t) dt must be a
  trigonometric polynomial of degree <= 2k in the detector angle;
* orthogonality condition: g is orthogonal to the boundary trace data of
  disk Dirichlet eigenfunctions J_m(lam r) exp(i m theta), lam a zero of
  J_m, weighted by J_0(lam t) t;
* Bessel-zero condition: the angular Fourier coefficients of the
  J_0-weighted radial transform g_m(lam) vanish at the zeros of J_m.

All residuals are normalized ratios, hence invariant under data scaling.
The checks are only meaningful for full circular apertures; arcs and
non-circular surfaces are refused rather than given a misleading verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j, bessel_j_prime, bessel_j0, bessel_zeros
from .errors import ValidationError
from .model import CIRCLE, MEAN, ProjectionData

__all__ = [
    "RangeCheckConfig",
    "check_moments",
    "check_orthogonality",
    "check_bessel_zeros",
    "disk_eigenpairs",
    "run_range_checks",
]


def _validate(proj: ProjectionData, need_tmax: float = 0.0) -> None:
    det = proj.detectors
    if det.dim != 2:
        raise ValidationError(f"range checks are 2D only, got dim {det.dim}")
    if proj.kind != MEAN:
        raise ValidationError(
            f"range checks expect mean-kind data, got kind {proj.kind!r}"
        )
    if det.geometry != CIRCLE:
        raise ValidationError(
            "range checks need a full circular aperture, got geometry "
            f"{det.geometry!r}; partial or non-circular data is refused"
        )
    if abs(det.radius - 1.0) > 1e-9:
        raise ValidationError(
            f"range checks are stated on the unit circle, got radius {det.radius}"
        )
    th = np.sort(np.mod(det.angles, 2.0 * np.pi))
    gaps = np.diff(np.concatenate([th, [th[0] + 2.0 * np.pi]]))
    if np.max(np.abs(gaps - 2.0 * np.pi / det.count)) > 1e-9:
        raise ValidationError("range checks need equispaced detector angles")
    if proj.t_max < need_tmax - 1e-12:
        raise ValidationError(
            f"t_max = {proj.t_max} is too short; need at least {need_tmax}"
        )


def check_moments(proj: ProjectionData, k_max: int = 5) -> np.ndarray:
    """Residual energy above harmonic order 2k in the k-th radial moment.

    Returns one ratio in [0, 1] per k = 0..k_max; range data gives ratios
    at the level of the quadrature error.
    """
    _validate(proj)
    det = proj.detectors
    if det.count < 2 * (2 * k_max) + 1:
        raise ValidationError(
            f"{det.count} detectors cannot resolve harmonics up to "
            f"{2 * k_max}; need at least {2 * (2 * k_max) + 1}"
        )
    order = np.argsort(np.mod(det.angles, 2.0 * np.pi))
    g = proj.values[order]
    t = proj.t
    out = np.zeros(k_max + 1)
    freq = np.fft.fftfreq(det.count, d=1.0 / det.count)
    for k in range(k_max + 1):
        mk = np.trapezoid(g * t ** (2 * k + 1), t, axis=1)
        power = np.abs(np.fft.fft(mk)) ** 2
        total = float(power.sum())
        if total == 0.0:
            continue
        out[k] = float(power[np.abs(freq) > 2 * k + 0.5].sum()) / total
    return out


def disk_eigenpairs(m_max: int, per_order: int) -> list:
    """(m, lam) with lam running over the first zeros of J_m, m = 0..m_max.

    Negative angular orders are redundant for real data (conjugate
    residuals), so only m >= 0 is listed.
    """
    pairs = []
    for m in range(m_max + 1):
        for lam in bessel_zeros(m, per_order).zeros:
            pairs.append((m, float(lam)))
    return pairs


def check_orthogonality(proj: ProjectionData, pairs) -> np.ndarray:
    """Normalized pairing of the data with disk eigenfunction traces.

    For each (m, lam) the test function is lam J_m'(lam) e^{i m theta}
    J_0(lam t) t; the residual is |<g, phi>| / (|g| |phi|) under the same
    quadrature, so it lies in [0, 1] and vanishes on range data up to
    discretization.
    """
    _validate(proj, need_tmax=2.0)
    det = proj.detectors
    t, g, w = proj.t, proj.values, det.weights
    th = det.angles
    gnorm = float(np.sqrt(np.sum(w * np.trapezoid(g * g * t, t, axis=1))))
    out = np.zeros(len(pairs))
    if gnorm == 0.0:
        return out
    for idx, (m, lam) in enumerate(pairs):
        j0t = bessel_j0(lam * t)
        inner_t = np.trapezoid(g * j0t * t, t, axis=1)
        coeff = lam * bessel_j_prime(m, lam)
        num = abs(coeff) * abs(np.sum(w * np.exp(1j * m * th) * inner_t))
        phinorm = abs(coeff) * np.sqrt(
            np.sum(w) * np.trapezoid(j0t * j0t * t, t)
        )
        out[idx] = num / (gnorm * phinorm)
    return out


def check_bessel_zeros(
    proj: ProjectionData,
    m_max: int = 8,
    zeros_per_order: int = 3,
    lam_grid: np.ndarray = None,
) -> np.ndarray:
    """|g_hat_m| at the first zeros of J_m over its peak magnitude.

    g_hat_m(lam) = int g_m(t) J_0(lam t) t dt with g_m the weighted angular
    Fourier coefficient of the data.  Returns a (m_max+1, zeros_per_order)
    matrix of ratios.
    """
    _validate(proj)
    det = proj.detectors
    t, w, th = proj.t, det.weights, det.angles
    tables = [bessel_zeros(m, zeros_per_order).zeros for m in range(m_max + 1)]
    if lam_grid is None:
        top = max(tb[-1] for tb in tables)
        lam_grid = np.linspace(0.5, top + 3.0, 512)
    # radial transform at all probe frequencies, then angular projection
    kern_grid = bessel_j0(lam_grid[:, None] * t[None, :]) * t[None, :]
    out = np.zeros((m_max + 1, zeros_per_order))
    spectra, peaks = [], np.zeros(m_max + 1)
    for m in range(m_max + 1):
        gm = (w * np.exp(-1j * m * th)) @ proj.values
        spectra.append(gm)
        peaks[m] = float(np.max(np.abs(
            np.trapezoid(kern_grid * gm[None, :], t, axis=1)
        )))
    # orders carrying no energy at all (symmetric data) stay at residual 0
    # instead of dividing rounding noise by rounding noise
    floor = 1e-10 * float(np.max(peaks))
    for m in range(m_max + 1):
        if peaks[m] <= floor:
            continue
        kern_zero = bessel_j0(tables[m][:, None] * t[None, :]) * t[None, :]
        at_zeros = np.trapezoid(kern_zero * spectra[m][None, :], t, axis=1)
        out[m] = np.abs(at_zeros) / peaks[m]
    return out


@dataclass(frozen=True)
class RangeCheckConfig:
    """Thresholds calibrated from clean-data quadrature error at default
    resolution (512 detectors, 513 radial samples); see the test suite."""

    k_max: int = 5
    m_max: int = 8
    zeros_per_order: int = 3
    moments_tol: float = 1e-3
    orthogonality_tol: float = 1e-3
    bessel_tol: float = 1e-2


def run_range_checks(proj: ProjectionData, config: RangeCheckConfig = None) -> dict:
    """All three validators with pass/fail verdicts against the config."""
    cfg = config or RangeCheckConfig()
    moments = check_moments(proj, cfg.k_max)
    pairs = disk_eigenpairs(cfg.m_max, cfg.zeros_per_order)
    orth = check_orthogonality(proj, pairs)
    bz = check_bessel_zeros(proj, cfg.m_max, cfg.zeros_per_order)
    report = {
        "moments": moments,
        "orthogonality": orth,
        "bessel_zeros": bz,
        "moments_ok": bool(np.all(moments <= cfg.moments_tol)),
        "orthogonality_ok": bool(np.all(orth <= cfg.orthogonality_tol)),
        "bessel_zeros_ok": bool(np.all(bz <= cfg.bessel_tol)),
    }
    report["ok"] = bool(
        report["moments_ok"] and report["orthogonality_ok"] and report["bessel_zeros_ok"]
    )
    return report
