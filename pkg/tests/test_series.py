import numpy as np
import pytest

from tatrec.errors import ValidationError
from tatrec.forward import forward_analytic
from tatrec.metrics import rel_l2
from tatrec.model import (
    CIRCLE,
    INTEGRAL,
    RECT,
    DetectorSet,
    GridSpec,
    Phantom,
    ProjectionData,
    make_detectors,
    rasterize,
)
from tatrec.series import (
    default_mode_count,
    rect_eigenbasis,
    series_coefficients,
    series_sum,
)

_BOX = ((-1.0, -1.0), (1.0, 1.0))


@pytest.fixture(scope="module")
def ball_data():
    ph = Phantom.of(2, ((0.15, -0.1), 0.35, 1.0))
    det = make_detectors(RECT, count=64, box=_BOX)
    t = np.linspace(0, 2.5, 641)
    return ph, forward_analytic(ph, det, t, INTEGRAL)


def test_eigenbasis_frequencies():
    basis = rect_eigenbasis((0.0, 0.0), (2.0, 1.0), count=12)
    want = np.pi * np.sqrt((basis.indices[:, 0] / 2.0) ** 2 + basis.indices[:, 1] ** 2)
    assert np.allclose(basis.lam, want)
    assert np.all(np.diff(basis.lam) >= -1e-12)
    # ground mode of the 2x1 box
    assert basis.indices[0].tolist() == [1, 1]
    assert basis.lam[0] == pytest.approx(np.pi * np.sqrt(1.25))


def test_eigenbasis_lam_max():
    basis = rect_eigenbasis(*_BOX, lam_max=10.0)
    assert np.all(basis.lam <= 10.0 + 1e-9)
    more = rect_eigenbasis(*_BOX, lam_max=10.5)
    assert more.count > basis.count
    spec = GridSpec.cube(1.0, 16)
    auto = default_mode_count(*_BOX, spec)
    assert np.all(auto.lam <= np.pi / spec.spacing + 1e-9)


def test_eigenbasis_orthonormal():
    basis = rect_eigenbasis((0.0, -0.5), (1.5, 0.5), count=8)
    spec = GridSpec((0.0, -0.5), (1.5, 0.5), (384, 256))
    pts = spec.points()
    h2 = spec.spacing**2
    funcs = [basis.eigenfunction(k, pts) for k in range(8)]
    G = np.array([[np.sum(a * b) * h2 for b in funcs] for a in funcs])
    assert np.allclose(G, np.eye(8), atol=2e-3)


def test_normal_derivative_matches_fd():
    basis = rect_eigenbasis(*_BOX, count=6)
    y = np.linspace(-0.9, 0.9, 7)
    pos = np.stack([np.full_like(y, 1.0), y], axis=1)  # right face
    nrm = np.tile([1.0, 0.0], (y.size, 1))
    eps = 1e-6
    for k in range(6):
        got = basis.normal_derivative(k, pos, nrm)
        fd = (basis.eigenfunction(k, pos) - basis.eigenfunction(k, pos - eps * nrm)) / eps
        assert np.allclose(got, fd, atol=1e-4)


def test_eigenbasis_validation():
    with pytest.raises(ValidationError):
        rect_eigenbasis(*_BOX)  # neither count nor lam_max
    with pytest.raises(ValidationError):
        rect_eigenbasis(*_BOX, count=4, lam_max=5.0)
    with pytest.raises(ValidationError):
        rect_eigenbasis((0.0, 0.0), (0.0, 1.0), count=4)
    with pytest.raises(ValidationError):
        rect_eigenbasis((0.0,), (1.0,), count=4)


def test_coefficients_match_direct_quadrature(ball_data):
    # boundary-data formula against direct inner products with the modes
    ph, proj = ball_data
    basis = rect_eigenbasis(*_BOX, count=60)
    alpha = series_coefficients(proj, basis)
    spec = GridSpec.cube(1.0, 512)
    f = rasterize(ph, spec, subsamples=4)
    pts = spec.points()
    h2 = spec.spacing**2
    direct = np.array(
        [np.sum(f.values * basis.eigenfunction(k, pts)) * h2 for k in range(60)]
    )
    assert np.linalg.norm(alpha - direct) / np.linalg.norm(direct) < 1e-3


def test_ball_reconstruction(ball_data):
    ph, proj = ball_data
    m = 64
    spec = GridSpec.cube(1.0, m)
    basis = default_mode_count(*_BOX, spec)
    rec = series_sum(series_coefficients(proj, basis), basis, spec)
    ref = rasterize(ph, spec, subsamples=8)
    pts = spec.points()
    margin = np.all(np.abs(pts) < 1.0 - 3 * spec.spacing, axis=-1)
    assert rel_l2(rec.values, ref.values, margin) < 0.08


def test_exterior_source_rejected(ball_data):
    # data from a source outside the domain contributes (near) nothing
    ph, proj = ball_data
    spec = GridSpec.cube(1.0, 64)
    basis = default_mode_count(*_BOX, spec)
    interior = series_sum(series_coefficients(proj, basis), basis, spec)

    det = proj.detectors
    ext = Phantom.of(2, ((1.7, 0.4), 0.25, 1.0))
    t = np.linspace(0, 3.5, 897)
    pext = forward_analytic(ext, det, t, INTEGRAL)
    ghost = series_sum(series_coefficients(pext, basis), basis, spec)
    pts = spec.points()
    margin = np.all(np.abs(pts) < 1.0 - 3 * spec.spacing, axis=-1)
    ratio = np.linalg.norm(ghost.values[margin]) / np.linalg.norm(interior.values[margin])
    assert ratio < 0.02


def test_series_sum_renders_modes_exactly():
    basis = rect_eigenbasis(*_BOX, count=25)
    spec = GridSpec.cube(1.0, 48)
    pts = spec.points()
    for k in (0, 7, 24):
        alpha = np.zeros(basis.count)
        alpha[k] = 1.0
        fast = series_sum(alpha, basis, spec)
        assert np.allclose(fast.values, basis.eigenfunction(k, pts), atol=1e-12)


def test_series_sum_linear():
    basis = rect_eigenbasis(*_BOX, count=10)
    spec = GridSpec.cube(1.0, 32)
    rng = np.random.default_rng(5)
    a, b = rng.standard_normal(10), rng.standard_normal(10)
    va = series_sum(a, basis, spec).values
    vb = series_sum(b, basis, spec).values
    vab = series_sum(a + 2 * b, basis, spec).values
    assert np.allclose(vab, va + 2 * vb, atol=1e-12)


def test_series_validation(ball_data):
    _, proj = ball_data
    basis = rect_eigenbasis(*_BOX, count=4)
    circ = make_detectors(CIRCLE, count=8)
    pc = ProjectionData(circ, np.linspace(0, 2, 9), np.zeros((8, 9)), INTEGRAL)
    with pytest.raises(ValidationError):
        series_coefficients(pc, basis)
    # detectors on a different rectangle than the basis domain
    off = make_detectors(RECT, count=8, box=((-1.2, -1.2), (1.2, 1.2)))
    po = ProjectionData(off, np.linspace(0, 2, 9), np.zeros((32, 9)), INTEGRAL)
    with pytest.raises(ValidationError):
        series_coefficients(po, basis)
    # one face entirely missing
    det = make_detectors(RECT, count=8, box=_BOX)
    keep = det.positions[:, 0] < 1.0 - 1e-12
    cut = DetectorSet(RECT, det.positions[keep], det.normals[keep],
                      det.weights[keep], box=det.box)
    pcut = ProjectionData(cut, np.linspace(0, 2, 9),
                          np.zeros((cut.count, 9)), INTEGRAL)
    with pytest.raises(ValidationError):
        series_coefficients(pcut, basis)
    with pytest.raises(ValidationError):
        series_sum(np.zeros(3), basis, GridSpec.cube(1.0, 16))
