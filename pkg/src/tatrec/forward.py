"""Forward projection of phantoms: analytic ball formulas and quadrature.

The analytic path is exact (up to rounding) for ball phantoms and serves
as the reference oracle for everything else.  The quadrature path works on
arbitrary rasterized images and is what partial-data and square-phantom
experiments use.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .model import (
    INTEGRAL,
    MEAN,
    DetectorSet,
    ImageGrid,
    Phantom,
    ProjectionData,
    sphere_measure,
)


def mean_ball(d, r, rho: float, dim: int):
    """Fraction of the sphere |x - z| = r lying inside the ball B(c, rho),
    where d = |z - c|.

    Equals the spherical mean of the ball's indicator.  Closed form via the
    polar angle of the intersection cap: with c = (d^2 + r^2 - rho^2)/(2 d r),
    the fraction is (1 - c)/2 in 3D and arccos(c)/pi in 2D.
    """
    if dim not in (2, 3):
        raise ValidationError(f"dim must be 2 or 3, got {dim}")
    if rho <= 0:
        raise ValidationError(f"ball radius must be positive, got {rho}")
    r_arr = np.asarray(r, dtype=float)
    scalar = r_arr.ndim == 0 and np.ndim(d) == 0
    d_arr = np.broadcast_to(np.asarray(d, dtype=float), np.broadcast_shapes(np.shape(d), r_arr.shape)).astype(float)
    r_arr = np.broadcast_to(r_arr, d_arr.shape).astype(float)
    if np.any(d_arr < 0) or np.any(r_arr < 0):
        raise ValidationError("mean_ball requires d >= 0 and r >= 0")

    out = np.zeros(d_arr.shape)
    full = d_arr + r_arr <= rho
    empty = (d_arr >= r_arr + rho) | (r_arr >= d_arr + rho)
    out[full] = 1.0
    partial = ~(full | empty)
    if np.any(partial):
        dp, rp = d_arr[partial], r_arr[partial]
        c = (dp * dp + rp * rp - rho * rho) / (2.0 * dp * rp)
        c = np.clip(c, -1.0, 1.0)
        if dim == 3:
            out[partial] = 0.5 * (1.0 - c)
        else:
            out[partial] = np.arccos(c) / np.pi
    return float(out) if scalar else out


def forward_analytic(
    phantom: Phantom,
    detectors: DetectorSet,
    t: np.ndarray,
    kind: str = INTEGRAL,
) -> ProjectionData:
    """Exact projections of a ball phantom (linear in the ball values)."""
    if phantom.dim != detectors.dim:
        raise ValidationError(
            f"phantom dim {phantom.dim} does not match detectors dim {detectors.dim}"
        )
    t = np.asarray(t, dtype=float)
    means = np.zeros((detectors.count, t.size))
    for b in phantom.balls:
        d = np.linalg.norm(detectors.positions - np.asarray(b.center), axis=1)
        for i in range(detectors.count):
            means[i] += b.value * mean_ball(d[i], t, b.radius, phantom.dim)
    proj = ProjectionData(detectors, t, means, MEAN)
    if kind == MEAN:
        return proj
    from .model import convert_kind

    return convert_kind(proj, kind)


def _sphere_directions(n_polar: int, n_azimuth: int):
    """Unit directions with exact-area weights summing to 4*pi."""
    theta = (np.arange(n_polar) + 0.5) * np.pi / n_polar
    band = np.cos(np.arange(n_polar) * np.pi / n_polar) - np.cos(
        (np.arange(n_polar) + 1) * np.pi / n_polar
    )
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    T, P = np.meshgrid(theta, phi, indexing="ij")
    dirs = np.stack(
        [np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1
    ).reshape(-1, 3)
    w = np.repeat(band * (2.0 * np.pi / n_azimuth), n_azimuth)
    return dirs, w


def forward_quadrature(
    image: ImageGrid,
    detectors: DetectorSet,
    t: np.ndarray,
    kind: str = INTEGRAL,
    samples: int | None = None,
) -> ProjectionData:
    """Projections of a sampled image by angular quadrature.

    The image is interpolated multilinearly and treated as zero outside its
    grid.  The angular sample count defaults to max(64, ceil(4*t_max/h))
    so arcs are sampled at least every quarter cell.
    """
    if image.dim != detectors.dim:
        raise ValidationError(
            f"image dim {image.dim} does not match detectors dim {detectors.dim}"
        )
    t = np.asarray(t, dtype=float)
    t_max = float(t[-1])
    if samples is None:
        samples = max(64, int(np.ceil(4.0 * t_max / image.spacing)))
    vals = np.zeros((detectors.count, t.size))
    if image.dim == 2:
        phi = 2.0 * np.pi * (np.arange(samples) + 0.5) / samples
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        w = np.full(samples, 2.0 * np.pi / samples)
    else:
        n_pol = max(8, samples // 2)
        dirs, w = _sphere_directions(n_pol, samples)
    # pts[j, k, :] = z + t_j * dir_k, one detector at a time to bound memory
    td = t[:, None, None] * dirs[None, :, :]
    for i in range(detectors.count):
        pts = detectors.positions[i][None, None, :] + td
        f = image.sample(pts)
        vals[i] = f @ w
    means = vals / w.sum()
    proj = ProjectionData(detectors, t, means, MEAN)
    if kind == MEAN:
        return proj
    from .model import convert_kind

    return convert_kind(proj, kind)


def add_noise(proj: ProjectionData, level: float, seed: int) -> ProjectionData:
    """Add seeded Gaussian noise with RMS = level * RMS(values)."""
    if level < 0:
        raise ValidationError(f"noise level must be >= 0, got {level}")
    rng = np.random.default_rng(seed)
    rms = float(np.sqrt(np.mean(proj.values**2)))
    noise = rng.standard_normal(proj.values.shape) * (level * rms)
    from dataclasses import replace

    return replace(proj, values=proj.values + noise)
