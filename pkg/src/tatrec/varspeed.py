"""Variable-sound-speed reconstruction on a square domain.

The operator A = -v^2 Lap with zero Dirichlet conditions is self-adjoint
in L^2(Omega, v^-2 dx); its discrete eigenpairs come from the generalized
symmetric problem (-Lap_h) psi = lam^2 diag(v^-2) psi on the interior
nodes of a conforming grid.  Pressure traces g on the boundary nodes then
determine f through modal moments

    g_k(t) = sum_i w_i g(z_i, t) dpsi_k/dn(z_i),

inverted either per mode (three equivalent time-integral formulas) or in
operator form, f = E g|_0 - int_0^T A^-1/2 sin(tau A^1/2) E(g_tt) dtau,
with E the discrete harmonic extension of boundary data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix, diags, lil_matrix
from scipy.sparse.linalg import eigsh, splu

from .errors import ValidationError
from .model import RECT, DetectorSet, GridSpec, ImageGrid
from .stencils import d1, d2
from .wave import SpeedField, WaveRecording

__all__ = [
    "DiscreteOperatorA",
    "ModalCoefficients",
    "build_operator",
    "boundary_node_detectors",
    "boundary_moments",
    "coefficients_varspeed",
    "recon_varspeed_series",
    "recon_operator_form",
    "spectral_multiplier",
]


def boundary_node_detectors(spec: GridSpec) -> DetectorSet:
    """Boundary grid nodes as detectors with trapezoid arc weights.

    Corner nodes appear once per adjacent face (half weight each); the
    normal traces of Dirichlet eigenfunctions vanish there, so the
    duplication never double-counts anything.
    """
    if spec.centered or spec.dim != 2:
        raise ValidationError("conforming boundary needs a 2D node-centered grid")
    m0, m1 = spec.shape
    h = spec.spacing
    ax = spec.axes()
    positions, normals, weights = [], [], []
    faces = [
        (0, spec.lo[0], (-1.0, 0.0)),
        (0, spec.hi[0], (1.0, 0.0)),
        (1, spec.lo[1], (0.0, -1.0)),
        (1, spec.hi[1], (0.0, 1.0)),
    ]
    for axis, side, n in faces:
        other = ax[1 - axis]
        for j, c in enumerate(other):
            pos = (side, c) if axis == 0 else (c, side)
            w = h if 0 < j < other.size - 1 else 0.5 * h
            positions.append(pos)
            normals.append(n)
            weights.append(w)
    return DetectorSet(
        RECT,
        np.array(positions),
        np.array(normals),
        np.array(weights),
        box=(spec.lo, spec.hi),
    )


@dataclass(frozen=True)
class DiscreteOperatorA:
    """Eigen-decomposition of -v^2 Lap on the interior of a square grid."""

    spec: GridSpec
    v: np.ndarray
    lam: np.ndarray
    psi: np.ndarray
    boundary: DetectorSet
    normal_trace: np.ndarray
    stiffness: csr_matrix

    def __post_init__(self):
        if np.any(self.lam <= 0):
            raise ValidationError("frequencies must be positive")
        if np.any(np.diff(self.lam) < -1e-9):
            raise ValidationError("frequencies must be ascending")

    @property
    def count(self) -> int:
        return int(self.lam.size)

    @property
    def interior_shape(self):
        return tuple(s - 2 for s in self.spec.shape)

    def interior_weight(self) -> np.ndarray:
        """Quadrature weight of the L^2(v^-2 dx) inner product per node."""
        h = self.spec.spacing
        return h * h / self.v[1:-1, 1:-1] ** 2

    def project(self, field: np.ndarray) -> np.ndarray:
        """Weighted inner products <field, psi_k> over interior nodes."""
        wf = field * self.interior_weight()
        return self.psi.reshape(self.count, -1) @ wf.reshape(-1)

    def render(self, coeffs) -> np.ndarray:
        """Modal sum on the full node grid (zero boundary)."""
        coeffs = np.asarray(coeffs, float)
        out = np.zeros(self.spec.shape)
        out[1:-1, 1:-1] = np.tensordot(coeffs, self.psi, axes=(0, 0))
        return out


def _interior_stiffness(spec: GridSpec, boundary_map: bool = False):
    """5-point -Lap on interior nodes; optionally the boundary coupling.

    Returns the CSR stiffness, and when asked a matrix mapping boundary
    detector values (from boundary_node_detectors ordering) to the
    right-hand side of a Dirichlet solve.
    """
    m0, m1 = spec.shape
    n0, n1 = m0 - 2, m1 - 2
    h2 = spec.spacing**2
    N = n0 * n1

    def idx(i, j):
        return i * n1 + j

    A = lil_matrix((N, N))
    for i in range(n0):
        for j in range(n1):
            k = idx(i, j)
            A[k, k] = 4.0 / h2
            if i > 0:
                A[k, idx(i - 1, j)] = -1.0 / h2
            if i < n0 - 1:
                A[k, idx(i + 1, j)] = -1.0 / h2
            if j > 0:
                A[k, idx(i, j - 1)] = -1.0 / h2
            if j < n1 - 1:
                A[k, idx(i, j + 1)] = -1.0 / h2
    A = csr_matrix(A)
    if not boundary_map:
        return A

    det = boundary_node_detectors(spec)
    ax = spec.axes()
    B = lil_matrix((N, det.count))
    pos = det.positions
    for col in range(det.count):
        x, y = pos[col]
        i = int(round((x - spec.lo[0]) / spec.spacing))
        j = int(round((y - spec.lo[1]) / spec.spacing))
        # boundary node (i, j) feeds its unique interior 5-point neighbor
        if i == 0 and 0 < j < m1 - 1:
            B[idx(0, j - 1), col] += 1.0 / h2
        elif i == m0 - 1 and 0 < j < m1 - 1:
            B[idx(n0 - 1, j - 1), col] += 1.0 / h2
        elif j == 0 and 0 < i < m0 - 1:
            B[idx(i - 1, 0), col] += 1.0 / h2
        elif j == m1 - 1 and 0 < i < m0 - 1:
            B[idx(i - 1, n1 - 1), col] += 1.0 / h2
        # corners never enter the 5-point stencil of an interior node
    return A, csr_matrix(B)


def build_operator(lo, hi, m: int, speed: SpeedField, count: int) -> DiscreteOperatorA:
    """First ``count`` generalized eigenpairs on an m x m node grid."""
    lo = tuple(float(v) for v in lo)
    hi = tuple(float(v) for v in hi)
    if len(lo) != 2 or len(hi) != 2:
        raise ValidationError("domain must be a 2D rectangle")
    spec = GridSpec(lo, hi, (m, m), centered=False)
    nint = (m - 2) * (m - 2)
    if count >= nint:
        raise ValidationError(
            f"requested {count} modes but the interior has only {nint} nodes"
        )
    if speed is None:
        v = np.ones(spec.shape)
    else:
        v = speed.sample(spec.points())
    if np.min(v) <= 0:
        raise ValidationError("sound speed must be strictly positive")

    A = _interior_stiffness(spec)
    vint = v[1:-1, 1:-1].reshape(-1)
    M = diags(1.0 / vint**2)
    n = A.shape[0]
    v0 = np.full(n, 1.0 / np.sqrt(n))
    vals, vecs = eigsh(A, k=count, M=M, sigma=0.0, which="LM", v0=v0)
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0:
        raise ValidationError("stiffness lost positivity; check the speed field")
    h = spec.spacing
    # eigsh gives sum psi^2 v^-2 = 1; physical normalization wants the
    # h^2-weighted sum, so rescale by 1/h
    vecs = vecs / h
    for k in range(count):
        col = vecs[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            vecs[:, k] = -col
    psi = vecs.T.reshape(count, m - 2, m - 2)

    det = boundary_node_detectors(spec)
    trace = np.zeros((count, det.count))
    pos = det.positions
    for col in range(det.count):
        x, y = pos[col]
        i = int(round((x - spec.lo[0]) / h))
        j = int(round((y - spec.lo[1]) / h))
        nx, ny = det.normals[col]
        for k in range(count):
            trace[k, col] = _boundary_normal_trace(psi[k], i, j, m, nx, ny, h)
    return DiscreteOperatorA(spec, v, np.sqrt(vals), psi, det, trace, A)


def _boundary_normal_trace(psi_int, i, j, m, nx, ny, h):
    """One-sided d psi/dn at boundary node (i, j) through the zero wall value.

    Dirichlet modes have psi'' = -lam^2 v^-2 psi = 0 on the wall, so the
    two-point difference (psi_1 - 0)/h is second-order accurate there.  It
    is also exactly dual to the 5-point harmonic extension: pairing data
    with these traces reproduces -lam^2 <E g, psi> to machine precision,
    which keeps the modal and operator-form inversions consistent.
    """
    if (i in (0, m - 1)) and (j in (0, m - 1)):
        return 0.0
    if nx < 0:
        val = psi_int[0, j - 1]
    elif nx > 0:
        val = psi_int[m - 3, j - 1]
    elif ny < 0:
        val = psi_int[i - 1, 0]
    else:
        val = psi_int[i - 1, m - 3]
    # derivative along -n with psi(0) = 0; flip sign for the exterior normal
    return -val / h


def boundary_moments(rec: WaveRecording, op: DiscreteOperatorA) -> np.ndarray:
    """g_k(t): weighted boundary sums of the traces, one row per mode."""
    if rec.detectors.count != op.boundary.count or not np.allclose(
        rec.detectors.positions, op.boundary.positions, atol=1e-9
    ):
        raise ValidationError("recording detectors must be the operator's "
                              "boundary nodes")
    return (op.normal_trace * op.boundary.weights) @ rec.samples


@dataclass(frozen=True)
class ModalCoefficients:
    values: np.ndarray
    decay_warning: np.ndarray

    @property
    def any_warning(self) -> bool:
        return bool(np.any(self.decay_warning))


def _decay_flags(gk: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(gk), axis=1)
    tail_n = max(2, gk.shape[1] // 50)
    tail = np.max(np.abs(gk[:, -tail_n:]), axis=1)
    return tail > 0.01 * np.where(peak > 0, peak, 1.0)


def coefficients_varspeed(gk: np.ndarray, t: np.ndarray, lam: np.ndarray,
                          variant: str = "C") -> ModalCoefficients:
    """Modal coefficients of f from the moment series g_k(t).

    The three time-integral formulas (variants A, B, C) are equal after
    integration by parts whenever g_k decays by the end of the window:

        A: -g_k(0)/lam^2 + lam^-3 int sin(lam t) g_k'' dt
        B: -g_k(0)/lam^2 - lam^-2 int cos(lam t) g_k'  dt
        C:              - lam^-1 int sin(lam t) g_k    dt
    """
    gk = np.atleast_2d(np.asarray(gk, float))
    lam = np.asarray(lam, float)
    t = np.asarray(t, float)
    if gk.shape[0] != lam.size:
        raise ValidationError("one moment series per mode is required")
    if gk.shape[1] != t.size:
        raise ValidationError("time grid does not match the moment series")
    dt = t[1] - t[0]
    flags = _decay_flags(gk)
    if np.any(flags):
        warnings.warn(
            f"{int(np.sum(flags))} modes kept >1% of peak at the window end; "
            "their coefficients are unreliable",
            stacklevel=2,
        )
    sin_t = np.sin(lam[:, None] * t[None, :])
    cos_t = np.cos(lam[:, None] * t[None, :])
    if variant == "A":
        vals = -gk[:, 0] / lam**2 + np.trapezoid(sin_t * d2(gk, dt), t, axis=1) / lam**3
    elif variant == "B":
        vals = -gk[:, 0] / lam**2 - np.trapezoid(cos_t * d1(gk, dt), t, axis=1) / lam**2
    elif variant == "C":
        vals = -np.trapezoid(sin_t * gk, t, axis=1) / lam
    else:
        raise ValidationError(f"unknown variant {variant!r}; use A, B or C")
    return ModalCoefficients(vals, flags)


def spectral_multiplier(lam: np.ndarray, tau: float) -> np.ndarray:
    """sin(tau lam)/lam; bounded by tau uniformly in lam."""
    lam = np.asarray(lam, float)
    return np.sin(tau * lam) / lam


def recon_varspeed_series(fk, op: DiscreteOperatorA, spec: GridSpec = None) -> ImageGrid:
    """Render sum_k f_k psi_k; optionally resampled onto another grid."""
    fk = np.asarray(getattr(fk, "values", fk), float)
    if fk.size != op.count:
        raise ValidationError("coefficient count does not match the operator")
    native = op.spec.make(op.render(fk))
    if spec is None:
        return native
    return spec.make(native.sample(spec.points()))


def recon_operator_form(rec: WaveRecording, op: DiscreteOperatorA,
                        spec: GridSpec = None) -> ImageGrid:
    """Harmonic-extension form of the modal inversion.

    Computes E g|_0 - int_0^T [sin(tau sqrt(A))/sqrt(A)] E(g_tt) dtau with
    the multiplier applied through the operator's eigen-decomposition.
    Time endpoints of g_tt use one-sided second differences.
    """
    gk_probe = boundary_moments(rec, op)
    flags = _decay_flags(gk_probe)
    if np.any(flags):
        warnings.warn(
            f"{int(np.sum(flags))} modes kept >1% of peak at the window end; "
            "the reconstruction window may be too short",
            stacklevel=2,
        )
    A, B = _interior_stiffness(op.spec, boundary_map=True)
    lu = splu(A.tocsc())
    t = rec.t
    g0 = rec.samples[:, 0]
    gtt = d2(rec.samples, rec.dt)
    Eg0 = lu.solve(B @ g0)
    Egtt = lu.solve((B @ gtt))

    h = op.spec.spacing
    w = (h * h / op.v[1:-1, 1:-1] ** 2).reshape(-1)
    psi_flat = op.psi.reshape(op.count, -1)
    coef = (psi_flat * w) @ Egtt
    mult = np.sin(op.lam[:, None] * t[None, :]) / op.lam[:, None]
    fk = np.trapezoid(mult * coef, t, axis=1)

    m0, m1 = op.spec.shape
    out = np.zeros((m0, m1))
    out[1:-1, 1:-1] = (Eg0 - psi_flat.T @ fk).reshape(m0 - 2, m1 - 2)
    # boundary nodes carry the measured t=0 trace
    pos = op.boundary.positions
    for col in range(op.boundary.count):
        i = int(round((pos[col, 0] - op.spec.lo[0]) / h))
        j = int(round((pos[col, 1] - op.spec.lo[1]) / h))
        out[i, j] = g0[col]
    native = op.spec.make(out)
    if spec is None:
        return native
    return spec.make(native.sample(spec.points()))
