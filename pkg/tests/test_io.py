import numpy as np
import pytest

from tatrec.errors import ValidationError
from tatrec.io import (
    load_image,
    load_projections,
    load_recording,
    load_sidecar,
    save_image,
    save_projections,
    save_recording,
    write_pgm,
)
from tatrec.model import (
    ARC,
    GridSpec,
    INTEGRAL,
    ProjectionData,
    make_detectors,
)
from tatrec.wave import WaveRecording


def test_image_roundtrip_2d(tmp_path):
    spec = GridSpec.cube(0.9, 12)
    img = spec.make(np.arange(144).reshape(12, 12).astype(float))
    paths = save_image(tmp_path / "img", img, extra={"note": "x"})
    back = load_image(paths["raw"])
    assert np.array_equal(back.values, img.values)
    assert np.allclose(back.origin, img.origin)
    assert back.spacing == img.spacing
    assert back.centered == img.centered
    meta = load_sidecar(tmp_path / "img")
    assert meta["type"] == "image" and meta["note"] == "x"


def test_image_roundtrip_3d_and_pgm(tmp_path):
    spec = GridSpec.cube(0.5, 6, dim=3)
    img = spec.make(np.random.default_rng(1).standard_normal((6, 6, 6)))
    save_image(tmp_path / "vol", img)
    back = load_image(tmp_path / "vol.json")
    assert np.array_equal(back.values, img.values)
    data = (tmp_path / "vol.pgm").read_bytes()
    assert data.startswith(b"P5\n6 6\n255\n")
    assert len(data) == len(b"P5\n6 6\n255\n") + 36


def test_pgm_windowing(tmp_path):
    ramp = np.linspace(0, 1, 16).reshape(4, 4)
    write_pgm(tmp_path / "r.pgm", ramp)
    body = (tmp_path / "r.pgm").read_bytes().split(b"255\n", 1)[1]
    assert body[0] == 0 and body[-1] == 255
    write_pgm(tmp_path / "c.pgm", np.full((4, 4), 3.7))
    body = (tmp_path / "c.pgm").read_bytes().split(b"255\n", 1)[1]
    assert set(body) == {0}
    with pytest.raises(ValidationError):
        write_pgm(tmp_path / "bad.pgm", np.zeros(5))


def test_projections_roundtrip(tmp_path):
    det = make_detectors(ARC, radius=1.5, count=8, span=np.pi / 2)
    t = np.linspace(0, 3, 33)
    vals = np.random.default_rng(2).standard_normal((8, 33))
    proj = ProjectionData(det, t, vals, INTEGRAL)
    save_projections(tmp_path / "proj", proj)
    back = load_projections(tmp_path / "proj")
    assert np.array_equal(back.values, vals)
    assert np.allclose(back.t, t)
    assert back.kind == INTEGRAL
    d = back.detectors
    assert d.geometry == ARC and d.radius == 1.5
    assert d.span == pytest.approx(np.pi / 2)
    assert d.start == pytest.approx(det.start)
    assert np.array_equal(d.positions, det.positions)
    assert np.array_equal(d.weights, det.weights)


def test_recording_roundtrip(tmp_path):
    det = make_detectors(ARC, count=6, span=1.0)
    rec = WaveRecording(det, 0.01, np.random.default_rng(3).standard_normal((6, 40)),
                        uniform_speed_flag=False)
    save_recording(tmp_path / "rec", rec, extra={"wave": {"m": 6}})
    back = load_recording(tmp_path / "rec")
    assert np.array_equal(back.samples, rec.samples)
    assert back.dt == rec.dt
    assert back.uniform_speed_flag is False
    assert load_sidecar(tmp_path / "rec")["wave"]["m"] == 6


def test_type_guards(tmp_path):
    det = make_detectors(ARC, count=4, span=1.0)
    proj = ProjectionData(det, np.linspace(0, 1, 5), np.zeros((4, 5)))
    save_projections(tmp_path / "p", proj)
    with pytest.raises(ValidationError):
        load_image(tmp_path / "p")
    with pytest.raises(ValidationError):
        load_recording(tmp_path / "p")


def test_writers_are_deterministic(tmp_path):
    spec = GridSpec.cube(1.0, 8)
    img = spec.make(np.sin(np.arange(64)).reshape(8, 8))
    save_image(tmp_path / "a", img, extra={"z": 1, "a": 2})
    save_image(tmp_path / "b", img, extra={"a": 2, "z": 1})
    for ext in (".raw", ".json", ".pgm"):
        assert (tmp_path / ("a" + ext)).read_bytes() == (
            tmp_path / ("b" + ext)
        ).read_bytes()


def test_suffix_stripping(tmp_path):
    spec = GridSpec.cube(1.0, 4)
    save_image(tmp_path / "x.raw", spec.make(np.ones((4, 4))))
    assert (tmp_path / "x.json").exists()
    assert load_image(tmp_path / "x.pgm").values.shape == (4, 4)
