"""Finite-difference stencils and per-detector profile lookup tables."""

from __future__ import annotations

import numpy as np


def d1(values: np.ndarray, dt: float) -> np.ndarray:
    """First derivative along the last axis; central inside, one-sided
    second order at both ends."""
    out = np.empty_like(values)
    out[..., 1:-1] = (values[..., 2:] - values[..., :-2]) / (2.0 * dt)
    out[..., 0] = (-3.0 * values[..., 0] + 4.0 * values[..., 1] - values[..., 2]) / (
        2.0 * dt
    )
    out[..., -1] = (3.0 * values[..., -1] - 4.0 * values[..., -2] + values[..., -3]) / (
        2.0 * dt
    )
    return out


def d2(values: np.ndarray, dt: float) -> np.ndarray:
    """Second derivative along the last axis; central inside, one-sided
    second order at both ends."""
    out = np.empty_like(values)
    out[..., 1:-1] = (values[..., 2:] - 2.0 * values[..., 1:-1] + values[..., :-2]) / (
        dt * dt
    )
    out[..., 0] = (
        2.0 * values[..., 0] - 5.0 * values[..., 1] + 4.0 * values[..., 2] - values[..., 3]
    ) / (dt * dt)
    out[..., -1] = (
        2.0 * values[..., -1]
        - 5.0 * values[..., -2]
        + 4.0 * values[..., -3]
        - values[..., -4]
    ) / (dt * dt)
    return out


def laplacian(u: np.ndarray, h: float) -> np.ndarray:
    """5-point (2D) / 7-point (3D) Laplacian of the interior; output shrinks
    by one sample on every side."""
    if u.ndim == 2:
        core = (
            u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]
        )
    else:
        core = (
            u[2:, 1:-1, 1:-1]
            + u[:-2, 1:-1, 1:-1]
            + u[1:-1, 2:, 1:-1]
            + u[1:-1, :-2, 1:-1]
            + u[1:-1, 1:-1, 2:]
            + u[1:-1, 1:-1, :-2]
            - 6.0 * u[1:-1, 1:-1, 1:-1]
        )
    return core / (h * h)


def divergence(components, h: float) -> np.ndarray:
    """Central-difference divergence of a vector field given as a list of
    component arrays; output shrinks by one sample on every side."""
    dim = len(components)
    if dim == 2:
        vx, vy = components
        return (
            (vx[2:, 1:-1] - vx[:-2, 1:-1]) + (vy[1:-1, 2:] - vy[1:-1, :-2])
        ) / (2.0 * h)
    vx, vy, vz = components
    return (
        (vx[2:, 1:-1, 1:-1] - vx[:-2, 1:-1, 1:-1])
        + (vy[1:-1, 2:, 1:-1] - vy[1:-1, :-2, 1:-1])
        + (vz[1:-1, 1:-1, 2:] - vz[1:-1, 1:-1, :-2])
    ) / (2.0 * h)


def profile_lookup(profile: np.ndarray, dt: float, r: np.ndarray) -> np.ndarray:
    """Linear interpolation of a uniformly sampled profile at radii r.

    The profile is extended by zero beyond its last sample (spherical data
    of a compactly supported source vanishes there).
    """
    u = r / dt
    i0 = np.floor(u).astype(np.int64)
    frac = u - i0
    n = profile.size
    inside = i0 < n - 1
    i0c = np.clip(i0, 0, n - 2)
    vals = profile[i0c] * (1.0 - frac) + profile[i0c + 1] * frac
    return np.where(inside, vals, 0.0)
