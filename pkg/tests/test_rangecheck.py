import numpy as np
import pytest
from scipy.stats import spearmanr

from tatrec.errors import ValidationError
from tatrec.forward import add_noise, forward_analytic
from tatrec.model import (
    ARC,
    CIRCLE,
    INTEGRAL,
    MEAN,
    DetectorSet,
    Phantom,
    ProjectionData,
    make_detectors,
)
from tatrec.rangecheck import (
    RangeCheckConfig,
    check_bessel_zeros,
    check_moments,
    check_orthogonality,
    disk_eigenpairs,
    run_range_checks,
)

_J01 = 2.4048255576957728


def _clean(count=512, nt=513):
    ph = Phantom.of(2, ((0.25, -0.15), 0.4, 1.0), ((-0.2, 0.3), 0.2, 0.6))
    det = make_detectors(CIRCLE, count=count)
    t = np.linspace(0, 2, nt)
    return forward_analytic(ph, det, t, MEAN)


@pytest.fixture(scope="module")
def clean():
    return _clean()


def test_clean_data_passes(clean):
    report = run_range_checks(clean)
    assert report["ok"]
    assert report["moments_ok"] and report["orthogonality_ok"] and report["bessel_zeros_ok"]
    assert np.max(report["moments"]) < 1e-3
    assert np.max(report["orthogonality"]) < 1e-3
    assert np.max(report["bessel_zeros"]) < 1e-2


def test_noisy_data_fails(clean):
    noisy = add_noise(clean, 0.02, seed=42)
    rep_c = run_range_checks(clean)
    rep_n = run_range_checks(noisy)
    assert not rep_n["ok"]
    # every family moves well clear of its clean level
    for key in ("moments", "orthogonality", "bessel_zeros"):
        assert np.max(rep_n[key]) > 5 * np.max(rep_c[key])


def test_moment_condition_semantics(clean):
    # a harmonic of order 3 in a 0th moment cannot come from range data
    det = clean.detectors
    th = det.angles
    t = clean.t
    viol = ProjectionData(det, t, np.cos(3 * th)[:, None] * np.ones_like(t)[None, :],
                          MEAN)
    res = check_moments(viol, k_max=2)
    assert res[0] > 0.5
    # ... but it is admissible in moments of order k >= 2 (2k >= 3)
    assert res[2] < 1e-12


def test_orthogonality_witness(clean):
    # radial profile J0(j01 t): unit-normalized pairing with its own
    # eigenpair, near-zero pairing with distant ones
    det = clean.detectors
    t = clean.t
    from tatrec.bessel import bessel_j0

    g = ProjectionData(det, t, np.tile(bessel_j0(_J01 * t), (det.count, 1)), MEAN)
    pairs = [(0, _J01), (4, 11.0647914)]
    res = check_orthogonality(g, pairs)
    assert res[0] > 0.99
    assert res[1] < 1e-6


def test_bessel_zero_semantics(clean):
    det = clean.detectors
    t = clean.t
    from tatrec.bessel import bessel_j0

    # radial frequency parked between the first two zeros of J0: the
    # transform does not vanish at the zeros
    lam_bad = 4.0
    g = ProjectionData(det, t, np.tile(bessel_j0(lam_bad * t), (det.count, 1)), MEAN)
    res = check_bessel_zeros(g, m_max=2, zeros_per_order=2)
    assert np.max(res[0]) > 0.05
    # orders with no angular energy stay at zero by the floor guard
    assert np.all(res[1:] == 0.0)


def test_residuals_scale_invariant(clean):
    scaled = ProjectionData(clean.detectors, clean.t, 137.0 * clean.values, MEAN)
    a = run_range_checks(clean)
    b = run_range_checks(scaled)
    for key in ("moments", "orthogonality", "bessel_zeros"):
        assert np.allclose(a[key], b[key], rtol=1e-9, atol=1e-12)


def test_families_rank_correlate(clean):
    # the three residual families should order a noise ladder the same way
    levels = [0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1]
    tops = {"moments": [], "orthogonality": [], "bessel_zeros": []}
    for i, lv in enumerate(levels):
        proj = clean if lv == 0.0 else add_noise(clean, lv, seed=100 + i)
        rep = run_range_checks(proj)
        for key in tops:
            tops[key].append(np.max(rep[key]))
    rho_mo, _ = spearmanr(tops["moments"], tops["orthogonality"])
    rho_ob, _ = spearmanr(tops["orthogonality"], tops["bessel_zeros"])
    assert rho_mo > 0.8
    assert rho_ob > 0.8


def test_refusals(clean):
    t = np.linspace(0, 2, 65)
    arc = make_detectors(ARC, count=64, span=np.pi)
    with pytest.raises(ValidationError):
        check_moments(ProjectionData(arc, t, np.zeros((64, 65)), MEAN))
    big = make_detectors(CIRCLE, radius=2.0, count=64)
    with pytest.raises(ValidationError):
        check_moments(ProjectionData(big, t, np.zeros((64, 65)), MEAN))
    circ = make_detectors(CIRCLE, count=64)
    with pytest.raises(ValidationError):
        check_moments(ProjectionData(circ, t, np.zeros((64, 65)), INTEGRAL))
    # jittered angles are not equispaced
    th = 2 * np.pi * np.arange(64) / 64
    th[5] += 0.01
    pos = np.stack([np.cos(th), np.sin(th)], axis=1)
    jit = DetectorSet(CIRCLE, pos, pos, np.full(64, 2 * np.pi / 64), radius=1.0)
    with pytest.raises(ValidationError):
        check_moments(ProjectionData(jit, t, np.zeros((64, 65)), MEAN))
    # too few detectors for the requested harmonic budget
    small = make_detectors(CIRCLE, count=16)
    with pytest.raises(ValidationError):
        check_moments(ProjectionData(small, t, np.zeros((16, 65)), MEAN), k_max=5)
    # orthogonality needs data out to t = 2
    short = ProjectionData(circ, np.linspace(0, 1.5, 49), np.zeros((64, 49)), MEAN)
    with pytest.raises(ValidationError):
        check_orthogonality(short, [(0, _J01)])


def test_disk_eigenpairs():
    pairs = disk_eigenpairs(m_max=3, per_order=2)
    assert len(pairs) == 8
    assert pairs[0] == (0, pytest.approx(_J01))
    for m in range(4):
        lams = [lam for mm, lam in pairs if mm == m]
        assert lams == sorted(lams)


def test_config_defaults():
    cfg = RangeCheckConfig()
    assert cfg.k_max == 5 and cfg.m_max == 8 and cfg.zeros_per_order == 3
    tight = RangeCheckConfig(moments_tol=1e-12)
    rep = run_range_checks(_clean(count=128, nt=257), tight)
    assert not rep["moments_ok"]


def test_zero_data_passes():
    det = make_detectors(CIRCLE, count=128)
    t = np.linspace(0, 2, 129)
    rep = run_range_checks(ProjectionData(det, t, np.zeros((128, t.size)), MEAN))
    assert rep["ok"]
    assert np.all(rep["orthogonality"] == 0.0)
