import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.linalg import splu

from tatrec.errors import ValidationError
from tatrec.metrics import rel_l2
from tatrec.model import GridSpec
from tatrec.varspeed import (
    boundary_moments,
    boundary_node_detectors,
    build_operator,
    coefficients_varspeed,
    recon_operator_form,
    recon_varspeed_series,
    spectral_multiplier,
)
from tatrec.varspeed import _interior_stiffness
from tatrec.wave import WaveRecording, bump, bump_speed, wave_forward


_LO, _HI = (-1.0, -1.0), (1.0, 1.0)


@pytest.fixture(scope="module")
def pipeline():
    """Small variable-speed forward solve plus its operator."""
    m, K = 40, 150
    spec = GridSpec(_LO, _HI, (m, m), centered=False)
    pts = spec.points()
    f0 = bump(pts, (-0.35, 0.25), 0.35) + 0.8 * bump(pts, (0.3, -0.35), 0.3)
    speed = bump_speed(spec, (0.2, -0.1), 0.5, 0.15)
    det = boundary_node_detectors(spec)
    rec = wave_forward(spec.make(f0), speed, det, T=8.0 * np.sqrt(2.0))
    op = build_operator(_LO, _HI, m, speed, K)
    return spec, f0, speed, rec, op


def test_boundary_node_detectors():
    spec = GridSpec(_LO, _HI, (16, 16), centered=False)
    det = boundary_node_detectors(spec)
    assert det.count == 4 * 16
    assert det.weights.sum() == pytest.approx(8.0, abs=1e-12)  # perimeter
    # all positions on the boundary, normals along axes
    on_edge = (np.abs(np.abs(det.positions) - 1.0) < 1e-12).any(axis=1)
    assert np.all(on_edge)
    assert np.allclose(np.abs(det.normals).sum(axis=1), 1.0)
    with pytest.raises(ValidationError):
        boundary_node_detectors(GridSpec.cube(1.0, 16))  # cell-centered


def test_operator_matches_exact_discrete_eigenvalues():
    # v = 1 on (0, pi)^2: the 5-point eigenvalues are
    # (4/h^2)(sin^2(k h/2) + sin^2(l h/2)), an exact oracle for the solver
    m = 24
    op = build_operator((0.0, 0.0), (np.pi, np.pi), m, None, 10)
    h = np.pi / (m - 1)
    k = np.arange(1, 8)
    mu = (4.0 / h**2) * np.sin(k * h / 2.0) ** 2
    exact = np.sort((mu[:, None] + mu[None, :]).ravel())[:10]
    assert np.allclose(op.lam**2, exact, rtol=1e-9)
    # and the continuous limit: ground frequency lam^2 -> 2
    assert op.lam[0] ** 2 == pytest.approx(2.0, rel=5e-3)


def test_operator_ground_mode_shape():
    m = 24
    op = build_operator((0.0, 0.0), (np.pi, np.pi), m, None, 3)
    x = np.pi * np.arange(1, m - 1) / (m - 1)
    want = (2.0 / np.pi) * np.sin(x)[:, None] * np.sin(x)[None, :]
    assert np.allclose(op.psi[0], want, atol=1e-6)


def test_operator_gram_orthonormal(pipeline):
    _, _, _, _, op = pipeline
    w = op.interior_weight().reshape(-1)
    psi = op.psi.reshape(op.count, -1)
    G = (psi * w) @ psi.T
    assert np.max(np.abs(G - np.eye(op.count))) < 1e-8


def test_traces_are_green_dual(pipeline):
    # pairing boundary data with the stored traces must equal
    # -lam^2 <E phi, psi>_w with E the discrete harmonic extension;
    # this is what keeps the modal and operator forms consistent
    spec, _, _, _, op = pipeline
    A, B = _interior_stiffness(op.spec, boundary_map=True)
    lu = splu(A.tocsc())
    rng = np.random.default_rng(11)
    phi = rng.standard_normal(op.boundary.count)
    ext = lu.solve(B @ phi)
    w = op.interior_weight().reshape(-1)
    psi = op.psi.reshape(op.count, -1)
    lhs = (op.normal_trace * op.boundary.weights) @ phi
    rhs = -op.lam**2 * ((psi * w) @ ext)
    assert np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)) < 1e-10


def test_corner_traces_vanish(pipeline):
    _, _, _, _, op = pipeline
    pos = op.boundary.positions
    corners = (np.abs(np.abs(pos[:, 0]) - 1.0) < 1e-12) & (
        np.abs(np.abs(pos[:, 1]) - 1.0) < 1e-12
    )
    assert np.all(op.normal_trace[:, corners] == 0.0)


def test_boundary_moments_guard(pipeline):
    spec, _, _, rec, op = pipeline
    other = boundary_node_detectors(GridSpec(_LO, _HI, (16, 16), centered=False))
    bad = WaveRecording(other, rec.dt, np.zeros((other.count, 8)))
    with pytest.raises(ValidationError):
        boundary_moments(bad, op)


def test_variants_agree_on_decaying_data():
    t = np.linspace(0, 12, 2401)
    lam = np.array([1.3, 2.7])
    env = np.exp(-((t - 2.0) ** 2) / 2.0)
    gk = np.stack([env * np.cos(1.1 * t), env * (0.3 + np.sin(0.7 * t))])
    vals = {}
    for variant in "ABC":
        vals[variant] = coefficients_varspeed(gk, t, lam, variant).values
    scale = np.max(np.abs(vals["C"]))
    assert np.max(np.abs(vals["A"] - vals["C"])) < 1e-3 * scale
    assert np.max(np.abs(vals["B"] - vals["C"])) < 1e-3 * scale


def test_decay_warning():
    t = np.linspace(0, 10, 501)
    gk = np.cos(2.0 * t)[None, :]  # never decays
    with pytest.warns(UserWarning):
        out = coefficients_varspeed(gk, t, np.array([2.0]))
    assert out.any_warning
    quiet = coefficients_varspeed((np.exp(-t) * np.cos(t))[None, :], t, np.array([2.0]))
    assert not quiet.any_warning


def test_coefficients_validation():
    t = np.linspace(0, 1, 11)
    with pytest.raises(ValidationError):
        coefficients_varspeed(np.zeros((2, 11)), t, np.array([1.0]))
    with pytest.raises(ValidationError):
        coefficients_varspeed(np.zeros((1, 10)), t, np.array([1.0]))
    with pytest.raises(ValidationError):
        coefficients_varspeed(np.zeros((1, 11)), t, np.array([1.0]), variant="Z")


@given(st.floats(0.05, 50.0), st.floats(0.05, 20.0))
@settings(max_examples=60, deadline=None)
def test_spectral_multiplier_bounded(lam, tau):
    assert abs(spectral_multiplier(np.array([lam]), tau)[0]) <= tau + 1e-12


def test_spectral_multiplier_small_lam_limit():
    assert spectral_multiplier(np.array([1e-8]), 0.7)[0] == pytest.approx(0.7)


def test_render_one_hot(pipeline):
    _, _, _, _, op = pipeline
    alpha = np.zeros(op.count)
    alpha[3] = 1.0
    img = recon_varspeed_series(alpha, op)
    assert np.allclose(img.values[1:-1, 1:-1], op.psi[3])
    assert np.all(img.values[0] == 0) and np.all(img.values[-1] == 0)
    with pytest.raises(ValidationError):
        recon_varspeed_series(np.zeros(op.count + 1), op)


def test_series_reconstruction(pipeline):
    spec, f0, _, rec, op = pipeline
    fk = coefficients_varspeed(boundary_moments(rec, op), rec.t, op.lam, "C")
    recon = recon_varspeed_series(fk, op)
    interior = np.zeros(spec.shape, bool)
    interior[2:-2, 2:-2] = True
    assert rel_l2(recon.values, f0, interior) < 0.15


def test_operator_form_matches_series(pipeline):
    spec, f0, _, rec, op = pipeline
    fk = coefficients_varspeed(boundary_moments(rec, op), rec.t, op.lam, "C")
    series = recon_varspeed_series(fk, op)
    opform = recon_operator_form(rec, op)
    interior = np.zeros(spec.shape, bool)
    interior[2:-2, 2:-2] = True
    assert rel_l2(opform.values, series.values, interior) < 0.01
    assert rel_l2(opform.values, f0, interior) < 0.15


def test_variant_choice_is_minor(pipeline):
    spec, _, _, rec, op = pipeline
    gk = boundary_moments(rec, op)
    recs = [
        recon_varspeed_series(coefficients_varspeed(gk, rec.t, op.lam, v), op).values
        for v in "ABC"
    ]
    interior = np.zeros(spec.shape, bool)
    interior[2:-2, 2:-2] = True
    assert rel_l2(recs[0], recs[2], interior) < 0.01
    assert rel_l2(recs[1], recs[2], interior) < 0.01


def test_resample_to_other_grid(pipeline):
    _, _, _, rec, op = pipeline
    fk = coefficients_varspeed(boundary_moments(rec, op), rec.t, op.lam, "C")
    fine = GridSpec.cube(0.9, 64)
    img = recon_varspeed_series(fk, op, fine)
    assert img.shape == (64, 64)
    assert np.all(np.isfinite(img.values))


def test_build_operator_validation():
    with pytest.raises(ValidationError):
        build_operator(_LO, _HI, 8, None, 36)  # interior is only 36 nodes
    with pytest.raises(ValidationError):
        build_operator((0.0,), (1.0,), 8, None, 4)


def test_halving_window_degrades_gracefully(pipeline):
    # shorter observation window: coefficients drift but stay in the same
    # ballpark; the full-window run is the reference
    spec, f0, speed, rec, op = pipeline
    n_half = rec.samples.shape[1] // 2
    half = WaveRecording(rec.detectors, rec.dt, rec.samples[:, :n_half],
                         uniform_speed_flag=rec.uniform_speed_flag)
    interior = np.zeros(spec.shape, bool)
    interior[2:-2, 2:-2] = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fk_half = coefficients_varspeed(
            boundary_moments(half, op), half.t, op.lam, "C"
        )
    err_half = rel_l2(recon_varspeed_series(fk_half, op).values, f0, interior)
    fk_full = coefficients_varspeed(boundary_moments(rec, op), rec.t, op.lam, "C")
    err_full = rel_l2(recon_varspeed_series(fk_full, op).values, f0, interior)
    assert err_full <= err_half
    assert err_half < 0.5
