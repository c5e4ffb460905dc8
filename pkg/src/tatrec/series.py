"""Eigenfunction-series reconstruction for rectangular and box apertures.

Works from circular (2D) or spherical (3D) integrals of f recorded on the
boundary of a rectangle or box Omega.  The modal coefficients of f in the
Dirichlet eigenbasis of Omega are

    alpha_k = sum_i w_i I(z_i, lam_k) dpsi_k/dn(z_i),
    I(z, lam) = int_0^tmax g(z, r) Phi_lam(r) dr,

where Phi_lam is the singular real part of the free-space Helmholtz
fundamental solution, -Y0(lam r)/4 in 2D and cos(lam r)/(4 pi r) in 3D.
The regular part integrates to zero against the normal traces, and point
sources outside Omega contribute exactly nothing, which is what makes
this method immune to exterior signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bessel import bessel_y0
from .errors import ValidationError
from .model import BOX, INTEGRAL, RECT, GridSpec, ImageGrid, ProjectionData, convert_kind

__all__ = [
    "EigenBasis",
    "rect_eigenbasis",
    "series_coefficients",
    "series_sum",
    "default_mode_count",
]


@dataclass(frozen=True)
class EigenBasis:
    """Dirichlet sine-product eigenbasis of a rectangle or box."""

    lo: tuple
    hi: tuple
    indices: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.lam) < -1e-12):
            raise ValidationError("eigenbasis frequencies must be ascending")
        if np.any(self.indices < 1):
            raise ValidationError("sine indices start at 1")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def count(self) -> int:
        return int(self.lam.size)

    @property
    def lengths(self) -> np.ndarray:
        return np.asarray(self.hi, float) - np.asarray(self.lo, float)

    @property
    def norm_const(self) -> float:
        # prod_a sqrt(2/L_a); makes int u_k^2 = 1 exactly
        return float(np.prod(np.sqrt(2.0 / self.lengths)))

    def eigenfunction(self, k: int, pts) -> np.ndarray:
        pts = np.asarray(pts, float)
        out = np.full(pts.shape[:-1], self.norm_const)
        for a in range(self.dim):
            freq = np.pi * self.indices[k, a] / self.lengths[a]
            out = out * np.sin(freq * (pts[..., a] - self.lo[a]))
        return out

    def normal_derivative(self, k: int, positions, normals) -> np.ndarray:
        """d u_k / dn at boundary points with outward unit normals.

        Evaluates grad u_k . n, which on the boundary faces reduces to the
        one-sided normal derivative of the sine product.
        """
        positions = np.asarray(positions, float)
        normals = np.asarray(normals, float)
        grad = np.zeros(positions.shape)
        for a in range(self.dim):
            freq = np.pi * self.indices[k, a] / self.lengths[a]
            term = np.full(positions.shape[:-1], self.norm_const * freq)
            for b in range(self.dim):
                fb = np.pi * self.indices[k, b] / self.lengths[b]
                arg = fb * (positions[..., b] - self.lo[b])
                term = term * (np.cos(arg) if b == a else np.sin(arg))
            grad[..., a] = term
        return np.sum(grad * normals, axis=-1)


def rect_eigenbasis(lo, hi, count: int = None, lam_max: float = None) -> EigenBasis:
    """First ``count`` Dirichlet eigenpairs of the rectangle/box [lo, hi].

    Alternatively keeps every mode with lam <= lam_max.  Frequencies are
    lam^2 = pi^2 sum_a (m_a / L_a)^2 with sine indices m_a >= 1, sorted by
    (lam, indices) so degenerate pairs appear in a fixed order.
    """
    lo = tuple(float(v) for v in lo)
    hi = tuple(float(v) for v in hi)
    if len(lo) != len(hi) or len(lo) not in (2, 3):
        raise ValidationError("domain must be a 2D rectangle or 3D box")
    if any(h <= l for l, h in zip(lo, hi)):
        raise ValidationError("domain sides must have positive length")
    if (count is None) == (lam_max is None):
        raise ValidationError("specify exactly one of count, lam_max")
    L = np.array(hi) - np.array(lo)
    if count is not None and count < 1:
        raise ValidationError("count must be >= 1")

    cap = lam_max
    if cap is None:
        # area/volume heuristic for how far out to enumerate, then grow
        cap = np.pi * np.sqrt(np.sum(1.0 / L**2)) * (1.0 + count ** (1.0 / len(L)))
    while True:
        ms = [np.arange(1, max(1, int(np.floor(cap * La / np.pi))) + 1) for La in L]
        if all(m.size for m in ms):
            grids = np.meshgrid(*ms, indexing="ij")
            idx = np.stack([g.ravel() for g in grids], axis=1)
            lam = np.pi * np.sqrt(np.sum((idx / L) ** 2, axis=1))
            keep = lam <= cap + 1e-12
            idx, lam = idx[keep], lam[keep]
            if lam_max is not None or lam.size >= count:
                break
        if lam_max is not None:
            idx = np.zeros((0, len(L)), int)
            lam = np.zeros(0)
            break
        cap *= 1.4
    order = np.lexsort(tuple(idx[:, a] for a in reversed(range(idx.shape[1]))) + (lam,))
    idx, lam = idx[order], lam[order]
    if count is not None:
        idx, lam = idx[:count], lam[:count]
    return EigenBasis(lo, hi, idx, lam)


def default_mode_count(basis_domain_lo, basis_domain_hi, spec: GridSpec) -> EigenBasis:
    """Basis truncated at the grid Nyquist frequency pi/h."""
    return rect_eigenbasis(basis_domain_lo, basis_domain_hi,
                           lam_max=np.pi / spec.spacing)


def _kernel_table(t: np.ndarray, lam: np.ndarray, dim: int) -> np.ndarray:
    """Phi_lam(t) sampled on the data time grid, one column per mode.

    The r = 0 entry is set to zero: integral-kind data vanishes at least
    linearly there, so the integrand has a removable singularity.
    """
    out = np.zeros((t.size, lam.size))
    r = t[1:][:, None] * lam[None, :]
    if dim == 2:
        out[1:] = -0.25 * bessel_y0(r)
    else:
        out[1:] = np.cos(r) / (4.0 * np.pi * t[1:][:, None])
    return out


def series_coefficients(proj: ProjectionData, basis: EigenBasis) -> np.ndarray:
    """Modal coefficients alpha_k of f from boundary integral data."""
    if proj.dim != basis.dim:
        raise ValidationError("data and basis dimensions differ")
    if proj.detectors.geometry not in (RECT, BOX):
        raise ValidationError("series inversion expects detectors on a rectangle/box")
    if proj.kind != INTEGRAL:
        proj = convert_kind(proj, INTEGRAL)
    det = proj.detectors
    lo, hi = np.asarray(basis.lo), np.asarray(basis.hi)
    onface = np.zeros(det.count, bool)
    for a in range(basis.dim):
        for side in (lo[a], hi[a]):
            onface |= np.abs(det.positions[:, a] - side) < 1e-9
    if not onface.all():
        raise ValidationError("detectors must lie on the domain boundary")
    for a in range(basis.dim):
        for side in (lo[a], hi[a]):
            face = np.abs(det.positions[:, a] - side) < 1e-9
            if not np.any(face):
                raise ValidationError("a face of the boundary has no detectors")

    phi = _kernel_table(proj.t, basis.lam, basis.dim)
    wt = np.full(proj.t.size, proj.dt)
    wt[0] = wt[-1] = 0.5 * proj.dt
    inner = (proj.values * wt) @ phi
    alpha = np.empty(basis.count)
    block = max(1, 2**22 // max(det.count, 1))
    for k0 in range(0, basis.count, block):
        k1 = min(k0 + block, basis.count)
        trace = _normal_trace_block(basis, k0, k1, det.positions, det.normals)
        alpha[k0:k1] = np.einsum("ki,i,ik->k", trace, det.weights, inner[:, k0:k1])
    return alpha


def _normal_trace_block(basis: EigenBasis, k0: int, k1: int, positions, normals):
    """d u_k/dn for a contiguous block of modes, vectorized over modes."""
    positions = np.asarray(positions, float)
    normals = np.asarray(normals, float)
    idx = basis.indices[k0:k1]
    out = np.zeros((k1 - k0, positions.shape[0]))
    for a in range(basis.dim):
        freq_a = np.pi * idx[:, a] / basis.lengths[a]
        term = basis.norm_const * freq_a[:, None] * normals[None, :, a]
        for b in range(basis.dim):
            fb = np.pi * idx[:, b] / basis.lengths[b]
            arg = fb[:, None] * (positions[None, :, b] - basis.lo[b])
            term = term * (np.cos(arg) if b == a else np.sin(arg))
        out += term
    return out


def series_sum(alpha, basis: EigenBasis, spec: GridSpec) -> ImageGrid:
    """Render sum_k alpha_k u_k on the grid.

    Exploits the sine-product separability: coefficients are scattered
    into a dense index tensor and contracted with per-axis sine tables,
    so the cost is a couple of matrix products instead of a loop over
    tens of thousands of modes.
    """
    alpha = np.asarray(alpha, float)
    if alpha.size != basis.count:
        raise ValidationError("coefficient count does not match basis")
    if spec.dim != basis.dim:
        raise ValidationError("grid and basis dimensions differ")
    ax = spec.axes()
    L = basis.lengths
    caps = [int(basis.indices[:, a].max()) if basis.count else 1
            for a in range(basis.dim)]
    tables = []
    for a in range(basis.dim):
        freqs = np.pi * np.arange(1, caps[a] + 1) / L[a]
        tables.append(np.sin(freqs[:, None] * (ax[a] - basis.lo[a])[None, :]))
    C = np.zeros(caps)
    np.add.at(C, tuple(basis.indices[:, a] - 1 for a in range(basis.dim)),
              alpha * basis.norm_const)
    if basis.dim == 2:
        vals = tables[0].T @ C @ tables[1]
    else:
        vals = np.einsum("ia,jb,kc,ijk->abc", tables[0], tables[1], tables[2], C,
                         optimize=True)
    return spec.make(vals)
