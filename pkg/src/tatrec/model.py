"""Phantoms, sampling grids, detector sets, and projection containers.

Conventions used throughout the package:

* phantoms are additive unions of constant-value balls (disks in 2D);
* image grids are axis-aligned with isotropic spacing; samples sit either
  at cell centers (default) or at lattice nodes including the endpoints;
* detector surfaces are circles / spheres of radius R centered at the
  origin, circular arcs, or the boundary of an axis-aligned rectangle/box;
* projection values come in two kinds: "integral" (integral of f over the
  sphere of radius t, i.e. surface measure times the mean) and "mean".
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError

Array = np.ndarray

INTEGRAL = "integral"
MEAN = "mean"


def sphere_measure(dim: int, t):
    """Surface measure of the sphere of radius t: 2*pi*t in 2D, 4*pi*t^2 in 3D."""
    t = np.asarray(t, dtype=float)
    if dim == 2:
        return 2.0 * np.pi * t
    if dim == 3:
        return 4.0 * np.pi * t * t
    raise ValidationError(f"dim must be 2 or 3, got {dim}")


# ---------------------------------------------------------------------------
# phantoms


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float
    value: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError(f"ball radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Phantom:
    """Additive union of balls; overlaps add."""

    balls: tuple
    dim: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValidationError(f"phantom dim must be 2 or 3, got {self.dim}")
        for b in self.balls:
            if len(b.center) != self.dim:
                raise ValidationError(
                    f"ball center {b.center} does not match dim {self.dim}"
                )

    @staticmethod
    def of(dim: int, *balls) -> "Phantom":
        """Build from Ball objects or (center, radius, value) triples."""
        made = tuple(
            b if isinstance(b, Ball) else Ball(tuple(b[0]), float(b[1]), float(b[2]))
            for b in balls
        )
        return Phantom(made, dim)

    def evaluate(self, pts: Array) -> Array:
        """Phantom values at points of shape (..., dim)."""
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1])
        for b in self.balls:
            d2 = np.zeros(pts.shape[:-1])
            for a in range(self.dim):
                d2 += (pts[..., a] - b.center[a]) ** 2
            out += b.value * (d2 <= b.radius**2)
        return out

    def support_radius(self) -> float:
        """Radius of the smallest origin-centered ball containing the support."""
        if not self.balls:
            return 0.0
        return max(
            float(np.linalg.norm(b.center)) + b.radius for b in self.balls
        )

    def reach_from(self, points: Array) -> float:
        """Largest distance from any of `points` to the support."""
        if not self.balls:
            return 0.0
        points = np.atleast_2d(np.asarray(points, dtype=float))
        reach = 0.0
        for b in self.balls:
            d = np.linalg.norm(points - np.asarray(b.center), axis=1)
            reach = max(reach, float(d.max()) + b.radius)
        return reach


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned box with an isotropic sample lattice.

    centered=True puts m samples per axis at cell centers lo + (i+1/2)h with
    h = (hi-lo)/m; centered=False puts them at nodes lo + i*h including both
    endpoints, h = (hi-lo)/(m-1).
    """

    lo: tuple
    hi: tuple
    shape: tuple
    centered: bool = True

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.shape)):
            raise ValidationError("GridSpec lo/hi/shape lengths differ")
        if any(m < 2 for m in self.shape):
            raise ValidationError(f"GridSpec shape too small: {self.shape}")
        hs = [self._h(a) for a in range(len(self.shape))]
        if max(hs) - min(hs) > 1e-12 * max(hs):
            raise ValidationError(f"grid spacing is not isotropic: {hs}")

    def _h(self, axis: int) -> float:
        n = self.shape[axis]
        w = self.hi[axis] - self.lo[axis]
        if w <= 0:
            raise ValidationError(f"GridSpec box degenerate on axis {axis}")
        return w / n if self.centered else w / (n - 1)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> float:
        return self._h(0)

    @property
    def origin(self) -> Array:
        lo = np.asarray(self.lo, dtype=float)
        if self.centered:
            return lo + 0.5 * self.spacing
        return lo

    def axes(self):
        o, h = self.origin, self.spacing
        return [o[a] + h * np.arange(self.shape[a]) for a in range(self.dim)]

    def points(self) -> Array:
        """Dense array of sample coordinates, shape self.shape + (dim,)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def padded(self, cells: int) -> "GridSpec":
        """Same lattice extended by `cells` extra samples on every side."""
        h = self.spacing
        lo = tuple(v - cells * h for v in self.lo)
        hi = tuple(v + cells * h for v in self.hi)
        shape = tuple(m + 2 * cells for m in self.shape)
        return GridSpec(lo, hi, shape, self.centered)

    def make(self, values: Array | None = None) -> "ImageGrid":
        if values is None:
            values = np.zeros(self.shape)
        values = np.asarray(values, dtype=float)
        if values.shape != tuple(self.shape):
            raise ValidationError(
                f"values shape {values.shape} does not match grid {self.shape}"
            )
        return ImageGrid(self.origin, self.spacing, values, self.centered)

    @staticmethod
    def cube(half_width: float, m: int, dim: int = 2, centered: bool = True) -> "GridSpec":
        lo = tuple(-half_width for _ in range(dim))
        hi = tuple(half_width for _ in range(dim))
        return GridSpec(lo, hi, tuple(m for _ in range(dim)), centered)


@dataclass
class ImageGrid:
    """Sampled scalar field: values[i, j(, k)] at origin + index * spacing."""

    origin: Array
    spacing: float
    values: Array
    centered: bool = True

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.origin.shape != (self.values.ndim,):
            raise ValidationError(
                f"origin length {self.origin.shape} does not match values ndim"
            )
        if self.spacing <= 0:
            raise ValidationError(f"spacing must be positive, got {self.spacing}")

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def axes(self):
        return [
            self.origin[a] + self.spacing * np.arange(self.shape[a])
            for a in range(self.dim)
        ]

    def points(self) -> Array:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def spec(self) -> GridSpec:
        h = self.spacing
        if self.centered:
            lo = tuple(self.origin - 0.5 * h)
            hi = tuple(self.origin[a] + h * (self.shape[a] - 0.5) for a in range(self.dim))
        else:
            lo = tuple(self.origin)
            hi = tuple(self.origin[a] + h * (self.shape[a] - 1) for a in range(self.dim))
        return GridSpec(lo, hi, self.shape, self.centered)

    def sample(self, pts: Array) -> Array:
        """Multilinear interpolation at pts (..., dim); zero outside the grid."""
        pts = np.asarray(pts, dtype=float)
        u = (pts - self.origin) / self.spacing
        i0 = np.floor(u).astype(np.int64)
        frac = u - i0
        out = np.zeros(pts.shape[:-1])
        # accumulate the 2^dim corner contributions
        for corner in range(1 << self.dim):
            w = np.ones(pts.shape[:-1])
            idx = []
            for a in range(self.dim):
                bit = (corner >> a) & 1
                ia = i0[..., a] + bit
                w = w * (frac[..., a] if bit else 1.0 - frac[..., a])
                idx.append(ia)
            valid = np.ones(pts.shape[:-1], dtype=bool)
            for a, ia in enumerate(idx):
                valid &= (ia >= 0) & (ia < self.shape[a])
            idx_c = tuple(np.clip(ia, 0, self.shape[a] - 1) for a, ia in enumerate(idx))
            out += np.where(valid, w * self.values[idx_c], 0.0)
        return out


def rasterize(phantom: Phantom, spec: GridSpec, subsamples: int = 1) -> ImageGrid:
    """Sample the phantom at the grid's cell centers (or nodes).

    subsamples > 1 averages a subsamples^dim stratified stencil per cell,
    giving a cell-coverage (antialiased) raster of the indicator sums.
    Either way the result is exactly linear in the ball values.
    """
    if phantom.dim != spec.dim:
        raise ValidationError(
            f"phantom dim {phantom.dim} does not match grid dim {spec.dim}"
        )
    pts = spec.points()
    if subsamples <= 1:
        return spec.make(phantom.evaluate(pts))
    offs = (np.arange(subsamples) + 0.5) / subsamples - 0.5
    acc = np.zeros(spec.shape)
    for shift in np.stack(
        np.meshgrid(*([offs] * spec.dim), indexing="ij"), axis=-1
    ).reshape(-1, spec.dim):
        acc += phantom.evaluate(pts + shift * spec.spacing)
    return spec.make(acc / subsamples**spec.dim)


# ---------------------------------------------------------------------------
# detectors

CIRCLE = "circle"
SPHERE = "sphere"
ARC = "arc"
RECT = "rect"
BOX = "box"

_SPHERICAL = (CIRCLE, SPHERE, ARC)


@dataclass
class DetectorSet:
    """Weighted point sample of an acquisition surface.

    weights approximate the surface measure: their sum equals the covered
    measure (2*pi*R for a circle, span*R for an arc, 4*pi*R^2 for a sphere,
    the perimeter/area for rect/box boundaries).
    """

    geometry: str
    positions: Array
    normals: Array
    weights: Array
    radius: float | None = None
    span: float | None = None
    start: float | None = None
    box: tuple | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.normals = np.asarray(self.normals, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.geometry in _SPHERICAL:
            if self.radius is None or self.radius <= 0:
                raise ValidationError(f"{self.geometry} detectors need radius > 0")
            r = np.linalg.norm(self.positions, axis=1)
            if np.max(np.abs(r - self.radius)) > 1e-12 * self.radius:
                raise ValidationError(
                    "detector positions are not on the stated surface "
                    f"(max radial deviation {np.max(np.abs(r - self.radius)):.3e})"
                )

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def angles(self) -> Array:
        if self.geometry not in (CIRCLE, ARC):
            raise ValidationError(f"angles undefined for geometry {self.geometry}")
        return np.arctan2(self.positions[:, 1], self.positions[:, 0])

    def covered_measure(self) -> float:
        if self.geometry == CIRCLE:
            return 2.0 * np.pi * self.radius
        if self.geometry == ARC:
            return self.span * self.radius
        if self.geometry == SPHERE:
            return 4.0 * np.pi * self.radius**2
        lo, hi = np.asarray(self.box[0]), np.asarray(self.box[1])
        side = hi - lo
        if self.geometry == RECT:
            return 2.0 * float(side.sum())
        # box surface area
        a, b, c = side
        return 2.0 * float(a * b + b * c + a * c)

    def scaled(self, factor: float) -> "DetectorSet":
        """Detector set in coordinates x -> factor * x (weights rescale too)."""
        power = self.dim - 1
        box = None
        if self.box is not None:
            box = (
                tuple(factor * v for v in self.box[0]),
                tuple(factor * v for v in self.box[1]),
            )
        return DetectorSet(
            self.geometry,
            self.positions * factor,
            self.normals.copy(),
            self.weights * factor**power,
            radius=None if self.radius is None else self.radius * factor,
            span=self.span,
            start=self.start,
            box=box,
        )


def make_detectors(
    geometry: str,
    radius: float = 1.0,
    count: int = 64,
    span: float | None = None,
    start: float | None = None,
    box: tuple | None = None,
) -> DetectorSet:
    """Build a detector set with quadrature weights.

    geometry:
      circle  -- `count` points equispaced over the full circle of `radius`
      arc     -- `count` points at midpoint angles over [start, start+span]
                 (start defaults to pi - span/2, i.e. an arc centered on the
                 negative x axis)
      sphere  -- latitude-longitude grid; `count` longitudes and count//2
                 latitude bands with exact band-area weights
      rect    -- `count` midpoint samples per side of the rectangle `box`
      box     -- count*count midpoint samples per face of the 3D `box`
    """
    if count < 4:
        raise ValidationError(f"detector count must be >= 4, got {count}")
    if geometry == CIRCLE:
        th = 2.0 * np.pi * np.arange(count) / count
        pos = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        nrm = pos / radius
        w = np.full(count, 2.0 * np.pi * radius / count)
        return DetectorSet(CIRCLE, pos, nrm, w, radius=radius)
    if geometry == ARC:
        if span is None or not (0.0 < span <= 2.0 * np.pi + 1e-12):
            raise ValidationError(f"arc span must lie in (0, 2*pi], got {span}")
        if start is None:
            start = np.pi - span / 2.0
        th = start + span * (np.arange(count) + 0.5) / count
        pos = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        nrm = pos / radius
        w = np.full(count, span * radius / count)
        return DetectorSet(ARC, pos, nrm, w, radius=radius, span=span, start=start)
    if geometry == SPHERE:
        nlon = count
        nlat = max(2, count // 2)
        theta = (np.arange(nlat) + 0.5) * np.pi / nlat
        phi = 2.0 * np.pi * np.arange(nlon) / nlon
        # exact band areas so the weights sum to 4*pi*R^2 to machine precision
        band = np.cos(np.arange(nlat) * np.pi / nlat) - np.cos(
            (np.arange(nlat) + 1) * np.pi / nlat
        )
        T, P = np.meshgrid(theta, phi, indexing="ij")
        pos = radius * np.stack(
            [np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1
        ).reshape(-1, 3)
        nrm = pos / radius
        W = np.repeat(band * (2.0 * np.pi / nlon) * radius**2, nlon)
        return DetectorSet(SPHERE, pos, nrm, W, radius=radius)
    if geometry == RECT:
        if box is None:
            raise ValidationError("rect detectors need box=(lo, hi)")
        lo, hi = (np.asarray(v, dtype=float) for v in box)
        pos, nrm, w = [], [], []
        for axis in range(2):
            other = 1 - axis
            length = hi[other] - lo[other]
            s = lo[other] + length * (np.arange(count) + 0.5) / count
            for side, coord, sign in ((0, lo[axis], -1.0), (1, hi[axis], 1.0)):
                p = np.zeros((count, 2))
                p[:, axis] = coord
                p[:, other] = s
                n = np.zeros((count, 2))
                n[:, axis] = sign
                pos.append(p)
                nrm.append(n)
                w.append(np.full(count, length / count))
        return DetectorSet(
            RECT,
            np.concatenate(pos),
            np.concatenate(nrm),
            np.concatenate(w),
            box=(tuple(lo), tuple(hi)),
        )
    if geometry == BOX:
        if box is None:
            raise ValidationError("box detectors need box=(lo, hi)")
        lo, hi = (np.asarray(v, dtype=float) for v in box)
        pos, nrm, w = [], [], []
        for axis in range(3):
            oth = [a for a in range(3) if a != axis]
            la, lb = hi[oth[0]] - lo[oth[0]], hi[oth[1]] - lo[oth[1]]
            sa = lo[oth[0]] + la * (np.arange(count) + 0.5) / count
            sb = lo[oth[1]] + lb * (np.arange(count) + 0.5) / count
            A, B = np.meshgrid(sa, sb, indexing="ij")
            for coord, sign in ((lo[axis], -1.0), (hi[axis], 1.0)):
                p = np.zeros((count * count, 3))
                p[:, axis] = coord
                p[:, oth[0]] = A.ravel()
                p[:, oth[1]] = B.ravel()
                n = np.zeros((count * count, 3))
                n[:, axis] = sign
                pos.append(p)
                nrm.append(n)
                w.append(np.full(count * count, la * lb / (count * count)))
        return DetectorSet(
            BOX,
            np.concatenate(pos),
            np.concatenate(nrm),
            np.concatenate(w),
            box=(tuple(lo), tuple(hi)),
        )
    raise ValidationError(f"unknown detector geometry {geometry!r}")


# ---------------------------------------------------------------------------
# visibility of interfaces under partial apertures


@dataclass(frozen=True)
class VisibilityMap:
    """Visibility flags for sampled interface points.

    A point is visible when the straight line through it along the
    interface normal meets the detector arc; equivalently, some circle
    centered at a detector is tangent to the interface there.
    """

    points: Array
    normals: Array
    visible: Array

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "normals", np.asarray(self.normals, dtype=float))
        object.__setattr__(self, "visible", np.asarray(self.visible, dtype=bool))
        if not (self.points.shape == self.normals.shape
                and self.points.shape[0] == self.visible.size):
            raise ValidationError("visibility arrays have mismatched shapes")

    @property
    def count(self) -> int:
        return int(self.visible.size)

    @property
    def fraction_visible(self) -> float:
        return float(np.mean(self.visible))


def _angle_in_arc(theta, det: DetectorSet):
    if det.geometry == CIRCLE:
        return np.ones(np.shape(theta), dtype=bool)
    rel = np.mod(theta - det.start, 2.0 * np.pi)
    return rel <= det.span + 1e-12


def interface_samples(phantom: Phantom, per_ball: int = 360):
    """Equiangular samples of every ball boundary with outward normals."""
    if phantom.dim != 2:
        raise ValidationError("interface sampling is 2D only")
    pts, nrm = [], []
    phi = 2.0 * np.pi * (np.arange(per_ball) + 0.5) / per_ball
    ring = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    for b in phantom.balls:
        pts.append(np.asarray(b.center) + b.radius * ring)
        nrm.append(ring.copy())
    return np.concatenate(pts), np.concatenate(nrm)


def visibility_map(phantom, detectors: DetectorSet, per_ball: int = 360) -> VisibilityMap:
    """Classify interface points as visible/invisible under an arc aperture.

    `phantom` is either a 2D Phantom (ball boundaries are sampled) or a
    pair (points, normals) for interfaces, such as square sides, that the
    ball model cannot express.  The normal line p + s*n (both directions)
    is intersected with the detector circle; the point is visible when an
    intersection angle falls inside the covered arc.
    """
    if detectors.geometry not in (CIRCLE, ARC):
        raise ValidationError(
            f"visibility needs circle/arc detectors, got {detectors.geometry}"
        )
    if isinstance(phantom, Phantom):
        pts, nrm = interface_samples(phantom, per_ball)
    else:
        pts, nrm = (np.asarray(v, dtype=float) for v in phantom)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("visibility is defined for 2D interfaces")
    nrm = nrm / np.linalg.norm(nrm, axis=1, keepdims=True)

    R = detectors.radius
    pn = np.sum(pts * nrm, axis=1)
    disc = pn * pn + R * R - np.sum(pts * pts, axis=1)
    visible = np.zeros(pts.shape[0], dtype=bool)
    hits = disc >= 0.0
    root = np.sqrt(np.maximum(disc, 0.0))
    for sgn in (-1.0, 1.0):
        s = -pn + sgn * root
        q = pts + s[:, None] * nrm
        theta = np.arctan2(q[:, 1], q[:, 0])
        visible |= hits & _angle_in_arc(theta, detectors)
    return VisibilityMap(pts, nrm, visible)


# ---------------------------------------------------------------------------
# projections


@dataclass
class ProjectionData:
    """Spherical projections g(z_i, t_j) on a uniform t grid starting at 0."""

    detectors: DetectorSet
    t: Array
    values: Array
    kind: str = INTEGRAL

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in (INTEGRAL, MEAN):
            raise ValidationError(f"projection kind must be integral|mean, got {self.kind}")
        if self.t.ndim != 1 or self.t.size < 2:
            raise ValidationError("t grid must be 1D with at least 2 samples")
        if abs(self.t[0]) > 1e-12:
            raise ValidationError(f"t grid must start at 0, got t[0]={self.t[0]}")
        dt = np.diff(self.t)
        if np.max(np.abs(dt - dt[0])) > 1e-9 * dt[0]:
            raise ValidationError("t grid must be uniform")
        if self.values.shape != (self.detectors.count, self.t.size):
            raise ValidationError(
                f"values shape {self.values.shape} does not match "
                f"(detectors, t) = ({self.detectors.count}, {self.t.size})"
            )

    @property
    def dim(self) -> int:
        return self.detectors.dim

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def t_max(self) -> float:
        return float(self.t[-1])


def convert_kind(proj: ProjectionData, target: str) -> ProjectionData:
    """Convert between integral and mean kinds.

    integral = sphere_measure(dim, t) * mean.  At t=0 the mean is taken as
    the nearest-sample limit; the integral there is exactly zero.
    """
    if target not in (INTEGRAL, MEAN):
        raise ValidationError(f"target kind must be integral|mean, got {target}")
    if target == proj.kind:
        return replace(proj, values=proj.values.copy())
    factor = sphere_measure(proj.dim, proj.t)
    if target == INTEGRAL:
        vals = proj.values * factor
    else:
        vals = np.empty_like(proj.values)
        vals[:, 1:] = proj.values[:, 1:] / factor[1:]
        vals[:, 0] = vals[:, 1]
    return replace(proj, values=vals, kind=target)


def normalize_to_unit(proj: ProjectionData) -> tuple:
    """Rescale circle/sphere/arc data to the unit aperture.

    Coordinates scale as x -> x/R and t -> t/R; integral-kind amplitudes
    divide by R^(dim-1) (the sphere measure factor), mean-kind amplitudes
    are scale invariant.  Returns (projection, R).
    """
    det = proj.detectors
    if det.geometry not in _SPHERICAL:
        raise ValidationError(
            f"normalization needs circle/sphere/arc geometry, got {det.geometry}"
        )
    R = det.radius
    if abs(R - 1.0) < 1e-12:
        return proj, 1.0
    vals = proj.values / R ** (det.dim - 1) if proj.kind == INTEGRAL else proj.values
    scaled = ProjectionData(det.scaled(1.0 / R), proj.t / R, vals, proj.kind)
    return scaled, R
