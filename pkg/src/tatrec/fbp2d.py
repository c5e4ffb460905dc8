"""Exact filtered-backprojection reconstruction from circular integrals in 2D.

Inverts g(z, t) = integral of f over the circle of radius t centered at
z for detectors on the unit circle (non-unit radii are normalized away,
partial arcs are accepted and produce the usual limited-view artifacts).
Only radii t <= 2 enter any of the formulas.

* ``recon_finch_log``: u(y) = sum_i w_i F_i(|y-z_i|^2) with
  F(z, s) = int_0^2 g(z, t) log|t^2 - s| dt, then f = Laplacian(u)/(4 pi^2).
* ``recon_finch_log_filtered``: same log potential applied to the filtered
  profiles d/dt (t d/dt (g/t)); no outer Laplacian.
* ``recon_kun2d``: h0(z, t) = p.v. int_0^2 g(z, t')/(t'^2 - t^2) dt',
  backprojected along detector normals; f = div V/(2 pi^2).

The log kernel is integrated exactly against a piecewise-linear model of
g on every t cell (closed-form antiderivatives of log|t^2-s| and
t log|t^2-s|), so the tables carry no quadrature singularities.  The
principal value in h0 uses the split
2/(t'^2-t^2) = (1/t') (1/(t'+t) + 1/(t'-t)) evaluated on a half-step
staggered t grid, which keeps the kernel finite and cancels the leading
odd error of the pole.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .model import (
    ARC,
    CIRCLE,
    INTEGRAL,
    GridSpec,
    ImageGrid,
    ProjectionData,
    convert_kind,
    normalize_to_unit,
)
from .stencils import d1, divergence, laplacian


def _prep(proj: ProjectionData, spec: GridSpec):
    if proj.dim != 2 or spec.dim != 2:
        raise ValidationError("2D reconstruction requires 2D data and a 2D grid")
    if proj.detectors.geometry not in (CIRCLE, ARC):
        raise ValidationError(
            f"2D filtered backprojection needs circle or arc detectors, got "
            f"{proj.detectors.geometry}"
        )
    proj, R = normalize_to_unit(proj)
    if proj.kind != INTEGRAL:
        proj = convert_kind(proj, INTEGRAL)
    if proj.t_max < 2.0 - 1e-9:
        raise ValidationError(
            f"2D inversion needs data up to t = 2 (unit aperture); got {proj.t_max}"
        )
    if R != 1.0:
        spec = GridSpec(
            tuple(v / R for v in spec.lo),
            tuple(v / R for v in spec.hi),
            spec.shape,
            spec.centered,
        )
    return proj, spec, R


def _physical(spec: GridSpec, values: np.ndarray, R: float) -> ImageGrid:
    if R != 1.0:
        spec = GridSpec(
            tuple(v * R for v in spec.lo),
            tuple(v * R for v in spec.hi),
            spec.shape,
            spec.centered,
        )
    return spec.make(values)


def _truncate(proj: ProjectionData):
    """Keep the t <= 2 part of the data (the formulas use no more)."""
    n = int(np.floor(2.0 / proj.dt + 1e-9)) + 1
    n = min(n, proj.t.size)
    return proj.t[:n], proj.values[:, :n]


def _xlog(v: np.ndarray) -> np.ndarray:
    # v * log|v| extended continuously by 0 at v = 0
    av = np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = v * np.log(np.where(av > 0, av, 1.0))
    return out


def _log_potential_table(t: np.ndarray, g: np.ndarray, s_grid: np.ndarray):
    """F[i, l] = int g_i(t) log|t^2 - s_l| dt, exact for piecewise-linear g."""
    a = np.sqrt(s_grid)
    tg = t[:, None]
    TA = _xlog(tg - a[None, :]) + _xlog(tg + a[None, :]) - 2.0 * tg
    TB = 0.5 * (_xlog(tg * tg - s_grid[None, :]) - tg * tg)
    dA = TA[1:] - TA[:-1]
    dB = TB[1:] - TB[:-1]
    dt = t[1] - t[0]
    c1 = (g[:, 1:] - g[:, :-1]) / dt
    c0 = g[:, :-1] - c1 * t[:-1]
    return c0 @ dA + c1 @ dB


def _lookup_uniform(table_row: np.ndarray, ds: float, s: np.ndarray) -> np.ndarray:
    u = s / ds
    i0 = np.floor(u).astype(np.int64)
    i0 = np.clip(i0, 0, table_row.size - 2)
    frac = np.clip(u - i0, 0.0, 1.0)
    return table_row[i0] * (1.0 - frac) + table_row[i0 + 1] * frac


def _backproject_table(proj, pts, table, ds, vector=False):
    det = proj.detectors
    if vector:
        acc = [np.zeros(pts.shape[:-1]) for _ in range(2)]
    else:
        acc = np.zeros(pts.shape[:-1])
    for i in range(det.count):
        z = det.positions[i]
        s = (pts[..., 0] - z[0]) ** 2 + (pts[..., 1] - z[1]) ** 2
        contrib = det.weights[i] * _lookup_uniform(table[i], ds, s)
        if vector:
            n = det.normals[i]
            acc[0] += n[0] * contrib
            acc[1] += n[1] * contrib
        else:
            acc += contrib
    return acc


def _s_grid(proj, spec, t):
    """Uniform squared-distance grid covering every |y - z|^2 the padded
    grid can ask for, at four samples per data cell."""
    corners = np.array(
        [(x, y) for x in (spec.lo[0], spec.hi[0]) for y in (spec.lo[1], spec.hi[1])]
    )
    pad = 3 * spec.spacing
    d = np.linalg.norm(
        corners[:, None, :] - proj.detectors.positions[None, :, :], axis=-1
    )
    smax = (d.max() + pad) ** 2
    smax = max(smax, float(t[-1]) ** 2)
    ns = 4 * t.size
    return np.linspace(0.0, smax, ns)


def recon_finch_log(proj: ProjectionData, spec: GridSpec) -> ImageGrid:
    """Log-potential backprojection with the outer image-space Laplacian."""
    proj, spec, R = _prep(proj, spec)
    t, g = _truncate(proj)
    s_grid = _s_grid(proj, spec, t)
    F = _log_potential_table(t, g, s_grid)
    pad = spec.padded(2)
    u = _backproject_table(proj, pad.points(), F, s_grid[1] - s_grid[0])
    f = laplacian(u, spec.spacing) / (4.0 * np.pi**2)
    return _physical(spec, f[1:-1, 1:-1], R)


def recon_finch_log_filtered(proj: ProjectionData, spec: GridSpec) -> ImageGrid:
    """Log-potential backprojection of the profiles d/dt(t d/dt(g/t))."""
    proj, spec, R = _prep(proj, spec)
    t, g = _truncate(proj)
    phi = np.zeros_like(g)
    phi[:, 1:] = g[:, 1:] / t[1:]
    dt = float(t[1] - t[0])
    q = d1(t * d1(phi, dt), dt)
    s_grid = _s_grid(proj, spec, t)
    F = _log_potential_table(t, q, s_grid)
    u = _backproject_table(proj, spec.points(), F, s_grid[1] - s_grid[0])
    return _physical(spec, u / (4.0 * np.pi**2), R)


def pv_filter(t: np.ndarray, g: np.ndarray):
    """h0 on the half-step staggered grid via the split principal value.

    Returns (t_staggered, h0).  Also computable directly from the raw
    kernel 1/(t'^2 - t^2); the two agree identically, which the test suite
    asserts.
    """
    dt = float(t[1] - t[0])
    th = t[:-1] + 0.5 * dt
    phi = np.zeros_like(g)
    phi[:, 1:] = g[:, 1:] / t[1:]
    # trapezoid weights on the t' grid
    w = np.full(t.size, dt)
    w[0] = w[-1] = 0.5 * dt
    K = 0.5 * (
        1.0 / (t[:, None] + th[None, :]) + 1.0 / (t[:, None] - th[None, :])
    )
    return th, (phi * w) @ K


def _h0_at(h0_row, dt, r, nst):
    u = r / dt - 0.5
    i0 = np.clip(np.floor(u).astype(np.int64), 0, nst - 2)
    frac = np.clip(u - i0, 0.0, 1.0)
    return h0_row[i0] * (1.0 - frac) + h0_row[i0 + 1] * frac


def recon_kun2d(proj: ProjectionData, spec: GridSpec) -> ImageGrid:
    """Normal-field backprojection of the principal-value filtrate."""
    proj, spec, R = _prep(proj, spec)
    t, g = _truncate(proj)
    th, h0 = pv_filter(t, g)
    dt = float(t[1] - t[0])
    det = proj.detectors
    pad = spec.padded(2)
    pts = pad.points()
    acc = [np.zeros(pts.shape[:-1]) for _ in range(2)]
    nst = th.size
    for i in range(det.count):
        z = det.positions[i]
        r = np.sqrt((pts[..., 0] - z[0]) ** 2 + (pts[..., 1] - z[1]) ** 2)
        contrib = det.weights[i] * _h0_at(h0[i], dt, r, nst)
        acc[0] += det.normals[i][0] * contrib
        acc[1] += det.normals[i][1] * contrib
    f = divergence(acc, spec.spacing) / (2.0 * np.pi**2)
    return _physical(spec, f[1:-1, 1:-1], R)
