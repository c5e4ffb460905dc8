"""Finite-difference acoustic forward model p_tt = v(x)^2 Lap p.

Second-order leapfrog on a rectangular grid extended by enough padding
that reflections from the computational boundary cannot reach any
detector within the recorded window; exactness by padding rather than
absorbing layers keeps runs bit-reproducible.

Also hosts the constant-speed bridge between pressure traces and
spherical means in 3D: t * M(z, t) = int_0^t p(z, tau) dtau and its
inverse p = d/dt (t * M).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CFLError, ValidationError
from .model import MEAN, DetectorSet, GridSpec, ImageGrid, ProjectionData
from .stencils import d1

__all__ = [
    "SpeedField",
    "WaveRecording",
    "uniform_speed",
    "bump",
    "bump_speed",
    "wave_forward",
    "means_from_pressure",
    "pressure_from_means",
]


def bump(pts, center, radius: float, amplitude: float = 1.0) -> np.ndarray:
    """C-infinity bump amplitude*exp(1 - 1/(1 - s^2)), s = |x-c|/radius.

    Vanishes with all derivatives at |x-c| = radius and outside.
    """
    pts = np.asarray(pts, float)
    s2 = np.sum((pts - np.asarray(center, float)) ** 2, axis=-1) / radius**2
    out = np.zeros(s2.shape)
    inside = s2 < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return out


def bump_speed(spec, center, radius: float, amplitude: float) -> "SpeedField":
    """v = 1 + bump; the perturbation must die out before the grid edge."""
    return SpeedField(spec.make(1.0 + bump(spec.points(), center, radius, amplitude)))


@dataclass(frozen=True)
class SpeedField:
    """Sound speed map; equals 1 outside its grid (compact perturbation)."""

    grid: ImageGrid

    def __post_init__(self):
        v = self.grid.values
        if np.min(v) <= 0:
            raise ValidationError("sound speed must be strictly positive")
        ring = np.ones(v.shape, bool)
        ring[(slice(1, -1),) * v.ndim] = False
        if np.max(np.abs(v[ring] - 1.0)) > 1e-9:
            raise ValidationError("sound speed must equal 1 on the grid boundary ring")

    @property
    def dim(self) -> int:
        return self.grid.values.ndim

    @property
    def v_max(self) -> float:
        return float(np.max(self.grid.values))

    @property
    def v_min(self) -> float:
        return float(np.min(self.grid.values))

    @property
    def is_uniform(self) -> bool:
        return self.v_max - self.v_min < 1e-12

    def sample(self, pts) -> np.ndarray:
        """Speed at arbitrary points; 1 outside the stored map."""
        vals = self.grid.sample(pts)
        inside = np.ones(vals.shape, bool)
        spec = self.grid.spec()
        pts = np.asarray(pts, float)
        for a in range(self.dim):
            inside &= (pts[..., a] >= spec.lo[a]) & (pts[..., a] <= spec.hi[a])
        return np.where(inside, vals, 1.0)


def uniform_speed(spec: GridSpec) -> SpeedField:
    return SpeedField(spec.make(np.ones(spec.shape)))


@dataclass(frozen=True)
class WaveRecording:
    """Pressure traces p(z_i, t_j) on a uniform time grid from 0."""

    detectors: DetectorSet
    dt: float
    samples: np.ndarray
    uniform_speed_flag: bool = True
    energy: np.ndarray = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError("time step must be positive")
        if self.samples.ndim != 2 or self.samples.shape[0] != self.detectors.count:
            raise ValidationError("samples must be (detectors, times)")

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.samples.shape[1])

    @property
    def dim(self) -> int:
        return self.detectors.positions.shape[1]


def _interp_weights(spec: GridSpec, positions: np.ndarray):
    """Multilinear gather indices/weights for fixed sample positions."""
    pos = (np.asarray(positions, float) - np.array(spec.origin)) / spec.spacing
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    dim = pos.shape[1]
    shape = spec.shape
    for a in range(dim):
        if np.any(i0[:, a] < 0) or np.any(i0[:, a] + 1 >= shape[a]):
            raise ValidationError("detector outside the computational domain")
    corners = []
    for mask in range(1 << dim):
        idx = i0.copy()
        w = np.ones(pos.shape[0])
        for a in range(dim):
            if mask >> a & 1:
                idx[:, a] += 1
                w = w * frac[:, a]
            else:
                w = w * (1.0 - frac[:, a])
        flat = np.ravel_multi_index(tuple(idx[:, a] for a in range(dim)), shape)
        corners.append((flat, w))
    return corners


def _laplacian_inplace(p: np.ndarray, out: np.ndarray, h: float):
    """7/5-point Laplacian, zero on the one-cell border."""
    out.fill(0.0)
    core = (slice(1, -1),) * p.ndim
    acc = out[core]
    acc -= 2.0 * p.ndim * p[core]
    for a in range(p.ndim):
        lo = tuple(slice(0, -2) if b == a else slice(1, -1) for b in range(p.ndim))
        hi = tuple(slice(2, None) if b == a else slice(1, -1) for b in range(p.ndim))
        acc += p[lo]
        acc += p[hi]
    out /= h * h


def wave_forward(initial: ImageGrid, speed: SpeedField, detectors: DetectorSet,
                 T: float, dt: float = None, track_energy: bool = False) -> WaveRecording:
    """Record boundary pressure for initial data (p, p_t)|_0 = (initial, 0)."""
    spec = initial.spec()
    dim = len(spec.shape)
    if speed is None:
        speed = uniform_speed(spec)
    if speed.dim != dim:
        raise ValidationError("speed and initial grids have different dimensions")
    h = spec.spacing
    v_max = speed.v_max
    if dt is None:
        dt = 0.5 * h / (v_max * np.sqrt(dim))
    if v_max * dt > h / np.sqrt(dim) + 1e-12:
        raise CFLError(
            f"time step {dt} violates stability: v_max*dt must be <= h/sqrt(dim) "
            f"= {h / np.sqrt(dim):.3e}"
        )
    nsteps = int(np.ceil(T / dt - 1e-9))
    pad_cells = int(np.ceil((v_max * T / 2.0) / h)) + 4
    padded = spec.padded(pad_cells)

    pts = padded.points()
    v = speed.sample(pts)
    p_prev = initial.sample(pts)
    gather = _interp_weights(padded, detectors.positions)

    def record(p, out_col):
        flatp = p.reshape(-1)
        acc = np.zeros(detectors.count)
        for flat, w in gather:
            acc += flatp[flat] * w
        rec[:, out_col] = acc

    rec = np.empty((detectors.count, nsteps + 1))
    record(p_prev, 0)
    lap = np.empty_like(p_prev)
    c2 = (dt * v) ** 2
    # first step from p_t(0) = 0: p^1 = p^0 + c2/2 * Lap p^0
    _laplacian_inplace(p_prev, lap, h)
    p_cur = p_prev + 0.5 * c2 * lap
    record(p_cur, 1)

    energies = [] if track_energy else None
    vol = h**dim
    if track_energy:
        energies.append(_energy(p_prev, p_cur, v, dt, h, vol))
    for n in range(2, nsteps + 1):
        _laplacian_inplace(p_cur, lap, h)
        p_next = 2.0 * p_cur - p_prev + c2 * lap
        p_prev, p_cur = p_cur, p_next
        record(p_cur, n)
        if track_energy:
            energies.append(_energy(p_prev, p_cur, v, dt, h, vol))
    return WaveRecording(
        detectors,
        float(dt),
        rec,
        uniform_speed_flag=speed.is_uniform,
        energy=np.array(energies) if track_energy else None,
    )


def _energy(p_old, p_new, v, dt, h, vol):
    """Discrete wave energy at the half step.

    Kinetic part in the v^-2 weight plus the cross term of forward
    differences of the two levels; this combination is a constant of the
    leapfrog recursion, so any drift flags a genuine solver problem
    (boundary contamination, instability), not scheme noise.
    """
    kin = np.sum(((p_new - p_old) / dt) ** 2 / v**2)
    cross = 0.0
    for a in range(p_new.ndim):
        lo = tuple(slice(0, -1) if b == a else slice(None) for b in range(p_new.ndim))
        hi = tuple(slice(1, None) if b == a else slice(None) for b in range(p_new.ndim))
        cross += np.sum((p_new[hi] - p_new[lo]) * (p_old[hi] - p_old[lo])) / (h * h)
    return float(0.5 * vol * (kin + cross))


def means_from_pressure(rec: WaveRecording) -> ProjectionData:
    """Spherical means from 3D constant-speed pressure traces.

    Uses t*M(z,t) = int_0^t p; the t=0 column is the limit M(z,0) = p(z,0).
    """
    if not rec.uniform_speed_flag:
        raise ValidationError("pressure-to-means bridge requires constant speed")
    if rec.dim != 3:
        raise ValidationError("pressure-to-means bridge is a 3D identity")
    t = rec.t
    csum = np.concatenate(
        [np.zeros((rec.samples.shape[0], 1)),
         np.cumsum(0.5 * (rec.samples[:, 1:] + rec.samples[:, :-1]) * rec.dt, axis=1)],
        axis=1,
    )
    means = np.empty_like(csum)
    means[:, 0] = rec.samples[:, 0]
    means[:, 1:] = csum[:, 1:] / t[1:]
    return ProjectionData(rec.detectors, t, means, MEAN)


def pressure_from_means(proj: ProjectionData) -> WaveRecording:
    """Inverse bridge: p = d/dt (t * M) by central differences."""
    if proj.dim != 3:
        raise ValidationError("means-to-pressure bridge is a 3D identity")
    if proj.kind != MEAN:
        raise ValidationError("means-to-pressure bridge expects mean-kind data")
    p = d1(proj.t * proj.values, proj.dt)
    return WaveRecording(proj.detectors, proj.dt, p, uniform_speed_flag=True)
