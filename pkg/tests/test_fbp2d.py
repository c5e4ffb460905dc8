import numpy as np
import pytest

from tatrec.errors import ValidationError
from tatrec.fbp2d import (
    pv_filter,
    recon_finch_log,
    recon_finch_log_filtered,
    recon_kun2d,
)
from tatrec.forward import forward_analytic
from tatrec.metrics import disk_mask, rel_l2
from tatrec.model import (
    ARC,
    CIRCLE,
    INTEGRAL,
    MEAN,
    RECT,
    GridSpec,
    Phantom,
    ProjectionData,
    make_detectors,
    rasterize,
)

METHODS = (recon_finch_log, recon_finch_log_filtered, recon_kun2d)

_M = 96


@pytest.fixture(scope="module")
def ball_setup():
    ph = Phantom.of(2, ((0.25, -0.1), 0.45, 1.0), ((-0.3, 0.3), 0.2, 0.5))
    det = make_detectors(CIRCLE, count=4 * _M)
    t = np.linspace(0, 2, 2 * _M + 1)
    proj = forward_analytic(ph, det, t, INTEGRAL)
    spec = GridSpec.cube(1.0, _M)
    ref = rasterize(ph, spec, subsamples=8)
    return proj, spec, ref


@pytest.mark.parametrize("method", METHODS)
def test_ball_reconstruction(method, ball_setup):
    proj, spec, ref = ball_setup
    rec = method(proj, spec)
    assert rec.shape == spec.shape
    err = rel_l2(rec.values, ref.values, disk_mask(spec, 0.95))
    assert err < 0.08


def test_methods_agree_pairwise(ball_setup):
    proj, spec, _ = ball_setup
    recs = [m(proj, spec).values for m in METHODS]
    mask = disk_mask(spec, 0.95)
    for i in range(3):
        for j in range(i + 1, 3):
            assert rel_l2(recs[i], recs[j], mask) < 0.05


@pytest.mark.parametrize("method", METHODS)
def test_linearity_and_zero(method, ball_setup):
    proj, spec, _ = ball_setup
    base = method(proj, spec).values
    scaled_proj = ProjectionData(proj.detectors, proj.t, -2.0 * proj.values, proj.kind)
    assert np.allclose(method(scaled_proj, spec).values, -2.0 * base, atol=1e-10)
    zero = ProjectionData(proj.detectors, proj.t, np.zeros_like(proj.values), proj.kind)
    assert np.max(np.abs(method(zero, spec).values)) == 0.0


@pytest.mark.parametrize("method", METHODS)
def test_mean_kind_auto_converted(method, ball_setup):
    proj, spec, _ = ball_setup
    from tatrec.model import convert_kind

    got = method(convert_kind(proj, MEAN), spec)
    want = method(proj, spec)
    assert np.allclose(got.values, want.values, atol=1e-10)


@pytest.mark.parametrize("method", METHODS)
def test_radius_normalization(method):
    # data on a circle of radius 2 reconstructs like unit-circle data of
    # the half-size phantom, cell for cell
    big = Phantom.of(2, ((0.5, -0.2), 0.9, 1.0))
    small = Phantom.of(2, ((0.25, -0.1), 0.45, 1.0))
    det2 = make_detectors(CIRCLE, radius=2.0, count=128)
    det1 = make_detectors(CIRCLE, radius=1.0, count=128)
    p2 = forward_analytic(big, det2, np.linspace(0, 4, 129), INTEGRAL)
    p1 = forward_analytic(small, det1, np.linspace(0, 2, 129), INTEGRAL)
    r2 = method(p2, GridSpec.cube(2.0, 64))
    r1 = method(p1, GridSpec.cube(1.0, 64))
    assert np.allclose(r2.values, r1.values, atol=1e-9)
    assert r2.spacing == pytest.approx(2 * r1.spacing)


def test_arc_data_accepted():
    ph = Phantom.of(2, ((0.3, 0.0), 0.25, 1.0))
    det = make_detectors(ARC, count=128, span=np.pi)
    proj = forward_analytic(ph, det, np.linspace(0, 2, 129), INTEGRAL)
    rec = recon_finch_log(proj, GridSpec.cube(1.0, 64))
    assert np.all(np.isfinite(rec.values))
    assert np.max(np.abs(rec.values)) < 10.0


def test_validation():
    spec = GridSpec.cube(1.0, 32)
    det = make_detectors(CIRCLE, count=8)
    short = ProjectionData(det, np.linspace(0, 1.5, 49), np.zeros((8, 49)), INTEGRAL)
    with pytest.raises(ValidationError):
        recon_finch_log(short, spec)
    rect = make_detectors(RECT, count=8, box=((-1.0, -1.0), (1.0, 1.0)))
    rproj = ProjectionData(rect, np.linspace(0, 2, 49), np.zeros((32, 49)), INTEGRAL)
    with pytest.raises(ValidationError):
        recon_kun2d(rproj, spec)
    with pytest.raises(ValidationError):
        recon_finch_log_filtered(
            ProjectionData(det, np.linspace(0, 2, 49), np.zeros((8, 49))),
            GridSpec.cube(0.85, 16, dim=3),
        )


def test_pv_filter_raw_kernel_identity():
    # the split kernel equals the raw 1/(t'^2 - t^2) sum exactly
    t = np.linspace(0, 2, 129)
    rng = np.random.default_rng(3)
    g = rng.standard_normal((5, t.size))
    g[:, 0] = 0.0
    th, h0 = pv_filter(t, g)
    dt = t[1] - t[0]
    w = np.full(t.size, dt)
    w[0] = w[-1] = 0.5 * dt
    raw = (g[:, 1:] * w[1:]) @ (1.0 / (t[1:, None] ** 2 - th[None, :] ** 2))
    assert np.allclose(h0, raw, atol=1e-10)


def test_pv_filter_analytic_value():
    # g = t makes the filtrate 0.5 * log((4 - t^2)/t^2) exactly
    t = np.linspace(0, 2, 257)
    th, h0 = pv_filter(t, t[None, :])
    want = 0.5 * np.log((4 - th**2) / th**2)
    sel = (th > 0.2) & (th < 1.8)
    assert np.max(np.abs(h0[0][sel] - want[sel])) < 5e-4
