"""File formats: raw float64 blobs with JSON sidecars and PGM previews.

Every artifact is a pair (base.raw, base.json) where the raw file holds
row-major little-endian 64-bit floats and the sidecar holds everything
needed to rebuild the object.  Images additionally get base.pgm, an 8-bit
preview with min-max windowing (middle slice for 3D volumes).  All writers
are deterministic: identical objects produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .model import DetectorSet, ImageGrid, ProjectionData
from .wave import WaveRecording

__all__ = [
    "save_image",
    "load_image",
    "save_projections",
    "load_projections",
    "save_recording",
    "load_recording",
    "load_sidecar",
    "write_pgm",
]

_SUFFIXES = (".raw", ".json", ".pgm")


def _base(path) -> Path:
    p = Path(path)
    if p.suffix in _SUFFIXES:
        p = p.with_suffix("")
    return p


def _write_json(path: Path, meta: dict) -> None:
    text = json.dumps(meta, indent=2, sort_keys=True)
    path.write_text(text + "\n")


def _write_raw(path: Path, values: np.ndarray) -> None:
    path.write_bytes(np.ascontiguousarray(values, dtype="<f8").tobytes())


def write_pgm(path, values: np.ndarray) -> None:
    """8-bit binary PGM with min-max windowing; constant images map to 0."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 3:
        v = v[v.shape[0] // 2]
    if v.ndim != 2:
        raise ValidationError(f"PGM preview needs a 2D array, got ndim {v.ndim}")
    lo, hi = float(v.min()), float(v.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img = np.round((v - lo) * scale).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())


def save_image(path, img: ImageGrid, extra: dict = None) -> dict:
    """Write base.raw + base.json + base.pgm; returns the paths written."""
    base = _base(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "type": "image",
        "dim": img.dim,
        "shape": list(img.shape),
        "origin": [float(v) for v in img.origin],
        "spacing": float(img.spacing),
        "centered": bool(img.centered),
    }
    if extra:
        meta.update(extra)
    _write_raw(base.with_suffix(".raw"), img.values)
    _write_json(base.with_suffix(".json"), meta)
    write_pgm(base.with_suffix(".pgm"), img.values)
    return {k: str(base.with_suffix("." + k)) for k in ("raw", "json", "pgm")}


def load_image(path) -> ImageGrid:
    base = _base(path)
    meta = json.loads(base.with_suffix(".json").read_text())
    if meta.get("type") != "image":
        raise ValidationError(f"{base}.json does not describe an image")
    shape = tuple(meta["shape"])
    values = np.frombuffer(
        base.with_suffix(".raw").read_bytes(), dtype="<f8"
    ).reshape(shape)
    return ImageGrid(
        np.asarray(meta["origin"], dtype=float),
        float(meta["spacing"]),
        values.copy(),
        bool(meta.get("centered", True)),
    )


def _detector_meta(det: DetectorSet) -> dict:
    meta = {
        "geometry": det.geometry,
        "positions": det.positions.tolist(),
        "normals": det.normals.tolist(),
        "weights": det.weights.tolist(),
    }
    if det.radius is not None:
        meta["radius"] = float(det.radius)
    if det.span is not None:
        meta["span"] = float(det.span)
        meta["start"] = float(det.start)
    if det.box is not None:
        meta["box"] = [list(map(float, det.box[0])), list(map(float, det.box[1]))]
    return meta


def _detector_from_meta(meta: dict) -> DetectorSet:
    box = meta.get("box")
    return DetectorSet(
        meta["geometry"],
        np.asarray(meta["positions"], dtype=float),
        np.asarray(meta["normals"], dtype=float),
        np.asarray(meta["weights"], dtype=float),
        radius=meta.get("radius"),
        span=meta.get("span"),
        start=meta.get("start"),
        box=(tuple(box[0]), tuple(box[1])) if box else None,
    )


def save_projections(path, proj: ProjectionData, extra: dict = None) -> dict:
    """Write base.raw (detectors x t-samples) + base.json."""
    base = _base(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "type": "projections",
        "kind": proj.kind,
        "t_max": proj.t_max,
        "samples": int(proj.t.size),
        "detectors": _detector_meta(proj.detectors),
    }
    if extra:
        meta.update(extra)
    _write_raw(base.with_suffix(".raw"), proj.values)
    _write_json(base.with_suffix(".json"), meta)
    return {k: str(base.with_suffix("." + k)) for k in ("raw", "json")}


def load_projections(path) -> ProjectionData:
    base = _base(path)
    meta = json.loads(base.with_suffix(".json").read_text())
    if meta.get("type") != "projections":
        raise ValidationError(f"{base}.json does not describe projections")
    det = _detector_from_meta(meta["detectors"])
    nt = int(meta["samples"])
    t = np.linspace(0.0, float(meta["t_max"]), nt)
    values = np.frombuffer(
        base.with_suffix(".raw").read_bytes(), dtype="<f8"
    ).reshape(det.count, nt)
    return ProjectionData(det, t, values.copy(), meta["kind"])


def save_recording(path, rec: WaveRecording, extra: dict = None) -> dict:
    """Write pressure traces as base.raw (detectors x times) + base.json."""
    base = _base(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "type": "recording",
        "dt": float(rec.dt),
        "samples": int(rec.samples.shape[1]),
        "uniform_speed": bool(rec.uniform_speed_flag),
        "detectors": _detector_meta(rec.detectors),
    }
    if extra:
        meta.update(extra)
    _write_raw(base.with_suffix(".raw"), rec.samples)
    _write_json(base.with_suffix(".json"), meta)
    return {k: str(base.with_suffix("." + k)) for k in ("raw", "json")}


def load_recording(path) -> WaveRecording:
    base = _base(path)
    meta = json.loads(base.with_suffix(".json").read_text())
    if meta.get("type") != "recording":
        raise ValidationError(f"{base}.json does not describe a wave recording")
    det = _detector_from_meta(meta["detectors"])
    values = np.frombuffer(
        base.with_suffix(".raw").read_bytes(), dtype="<f8"
    ).reshape(det.count, int(meta["samples"]))
    return WaveRecording(
        det, float(meta["dt"]), values.copy(), bool(meta["uniform_speed"])
    )


def load_sidecar(path) -> dict:
    """The JSON metadata next to any artifact."""
    return json.loads(_base(path).with_suffix(".json").read_text())
