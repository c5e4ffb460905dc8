"""Error metrics for comparing reconstructions against references.

Reconstruction formulas are exact inside the detector aperture only, and
grids may stick out of it, so every metric takes an optional mask.  The
usual choice is ``disk_mask`` (strict interior of the unit disk/ball)
optionally minus a thin boundary ring where backprojection stencils see
truncated data.
"""

from __future__ import annotations

import numpy as np

from .model import GridSpec, ImageGrid


def _values(img) -> np.ndarray:
    return img.values if isinstance(img, ImageGrid) else np.asarray(img, float)


def rel_l2(a, b, mask=None) -> float:
    """|a - b|_2 / |b|_2 over the masked cells."""
    va, vb = _values(a), _values(b)
    if mask is not None:
        va, vb = va[mask], vb[mask]
    denom = float(np.sqrt(np.sum(vb * vb)))
    if denom == 0.0:
        return float(np.sqrt(np.sum((va - vb) ** 2)))
    return float(np.sqrt(np.sum((va - vb) ** 2)) / denom)


def linf(a, b, mask=None) -> float:
    va, vb = _values(a), _values(b)
    if mask is not None:
        va, vb = va[mask], vb[mask]
    return float(np.max(np.abs(va - vb)))


def disk_mask(spec: GridSpec, radius: float = 1.0, center=None) -> np.ndarray:
    """Cells strictly inside the sphere of the given radius."""
    pts = spec.points()
    if center is None:
        center = np.zeros(spec.dim)
    r = np.linalg.norm(pts - np.asarray(center, float), axis=-1)
    return r < radius


def boundary_ring_mask(spec: GridSpec, radius: float = 1.0, width: float = 0.0,
                       center=None) -> np.ndarray:
    """Interior cells at least ``width`` away from the aperture sphere."""
    pts = spec.points()
    if center is None:
        center = np.zeros(spec.dim)
    r = np.linalg.norm(pts - np.asarray(center, float), axis=-1)
    return r < radius - width


def compare_report(recon, reference, mask=None) -> dict:
    """Bundle of scalar metrics, JSON-friendly."""
    vr, vf = _values(recon), _values(reference)
    if mask is not None:
        vr, vf = vr[mask], vf[mask]
    ref_linf = float(np.max(np.abs(vf))) if vf.size else 0.0
    out = {
        "rel_l2": rel_l2(vr, vf),
        "linf": linf(vr, vf),
        "ref_linf": ref_linf,
        "cells": int(vf.size),
    }
    if ref_linf > 0:
        out["linf_rel"] = out["linf"] / ref_linf
    return out
