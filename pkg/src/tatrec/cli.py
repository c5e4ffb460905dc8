"""Command-line orchestration.

Subcommands: phantom, forward, recon, validate, compare, experiment.
Every flag mirrors a key in the optional JSON config (flags override the
config; underscores in keys).  All artifacts go through the io module, so
identical configs produce byte-identical outputs; noise is always seeded
and the seed is logged in the sidecar.

Exit codes: 0 success, 2 validation error, 3 numerical-quality warning
escalated by --strict.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io as tio
from .errors import ValidationError
from .experiments import EXPERIMENTS
from .fbp2d import recon_finch_log, recon_finch_log_filtered, recon_kun2d
from .fbp3d import recon_fpr_filtered, recon_fpr_laplacian, recon_kun3d
from .forward import add_noise, forward_analytic
from .metrics import compare_report, disk_mask
from .model import (
    ARC,
    BOX,
    CIRCLE,
    INTEGRAL,
    MEAN,
    RECT,
    SPHERE,
    GridSpec,
    Phantom,
    convert_kind,
    make_detectors,
    rasterize,
)
from .rangecheck import RangeCheckConfig, run_range_checks
from .series import rect_eigenbasis, series_coefficients, series_sum
from .varspeed import (
    boundary_moments,
    boundary_node_detectors,
    build_operator,
    coefficients_varspeed,
    recon_operator_form,
    recon_varspeed_series,
)
from .wave import bump, bump_speed, wave_forward

_METHODS_2D = ("finch-log", "finch-filt", "kun2d")
_METHODS_3D = ("fpr-lap", "fpr-filt", "kun3d")
_FBP = {
    "fpr-lap": recon_fpr_laplacian,
    "fpr-filt": recon_fpr_filtered,
    "kun3d": recon_kun3d,
    "finch-log": recon_finch_log,
    "finch-filt": recon_finch_log_filtered,
    "kun2d": recon_kun2d,
}


def _opt(ns, key, default=None):
    val = getattr(ns, key, None)
    return default if val is None else val


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v != ""]


def _phantom(ns, dim: int) -> Phantom:
    balls = []
    for entry in _opt(ns, "ball", []) or []:
        vals = _floats(entry)
        if len(vals) != dim + 2:
            raise ValidationError(
                f"ball spec {entry!r} needs {dim + 2} numbers for dim {dim}"
            )
        balls.append((tuple(vals[:dim]), vals[dim], vals[dim + 1]))
    if not balls:
        raise ValidationError("no balls given; pass --ball or config 'ball'")
    return Phantom.of(dim, *balls)


def _out_base(ns) -> Path:
    out = _opt(ns, "out")
    if not out:
        raise ValidationError("an output path is required; pass --out")
    return Path(out)


def cmd_phantom(ns) -> int:
    dim = int(_opt(ns, "dim", 2))
    m = int(_opt(ns, "grid_m", 128 if dim == 2 else 64))
    half = float(_opt(ns, "grid_half", 1.0))
    sub = int(_opt(ns, "subsamples", 1))
    ph = _phantom(ns, dim)
    img = rasterize(ph, GridSpec.cube(half, m, dim), subsamples=sub)
    paths = tio.save_image(_out_base(ns), img, extra={
        "phantom": {"dim": dim, "balls": [
            [*b.center, b.radius, b.value] for b in ph.balls
        ]},
        "subsamples": sub,
    })
    print(f"phantom image written: {paths['raw']}")
    return 0


def _detectors(ns, dim: int):
    default_geo = CIRCLE if dim == 2 else SPHERE
    geometry = str(_opt(ns, "geometry", default_geo))
    count = int(_opt(ns, "count", 256 if dim == 2 else 48))
    radius = float(_opt(ns, "radius", 1.0))
    span = _opt(ns, "span")
    start = _opt(ns, "start")
    box = None
    if geometry in (RECT, BOX):
        lo = _floats(_opt(ns, "box_lo", [-1.0] * dim))
        hi = _floats(_opt(ns, "box_hi", [1.0] * dim))
        box = (tuple(lo), tuple(hi))
    return make_detectors(
        geometry,
        radius=radius,
        count=count,
        span=None if span is None else float(span),
        start=None if start is None else float(start),
        box=box,
    )


def _wave_forward(ns) -> int:
    half = float(_opt(ns, "grid_half", 1.0))
    m = int(_opt(ns, "grid_m", 64))
    lo, hi = (-half, -half), (half, half)
    nspec = GridSpec(lo, hi, (m, m), centered=False)
    pts = nspec.points()
    field = np.zeros(nspec.shape)
    for entry in _opt(ns, "source_bump", []) or []:
        cx, cy, r, amp = _floats(entry)
        field += bump(pts, (cx, cy), r, amp)
    if getattr(ns, "ball", None):
        field += rasterize(_phantom(ns, 2), nspec,
                           subsamples=int(_opt(ns, "subsamples", 1))).values
    if not np.any(field):
        raise ValidationError("wave forward needs --source-bump or --ball")
    speed_bump = _opt(ns, "speed_bump")
    speed = None
    if speed_bump is not None:
        cx, cy, r, amp = _floats(speed_bump)
        speed = bump_speed(nspec, (cx, cy), r, amp)
    v_min = 1.0 if speed is None else speed.v_min
    v_max = 1.0 if speed is None else speed.v_max
    T = float(_opt(ns, "big_t", 4.0 * np.hypot(hi[0] - lo[0], hi[1] - lo[1]) / v_min))
    cfl = float(_opt(ns, "cfl", 0.5))
    dt = cfl * nspec.spacing / (v_max * np.sqrt(2.0))
    rec = wave_forward(nspec.make(field), speed, boundary_node_detectors(nspec),
                       T=T, dt=dt)
    paths = tio.save_recording(_out_base(ns), rec, extra={
        "wave": {
            "lo": list(lo), "hi": list(hi), "m": m, "T": T, "cfl": cfl,
            "speed_bump": None if speed_bump is None else _floats(speed_bump),
        },
    })
    print(f"wave recording written: {paths['raw']}")
    return 0


def cmd_forward(ns) -> int:
    if _opt(ns, "wave", False):
        return _wave_forward(ns)
    dim = int(_opt(ns, "dim", 2))
    ph = _phantom(ns, dim)
    det = _detectors(ns, dim)
    reach = ph.reach_from(det.positions)
    t_default = max(reach, 2.0 * det.radius) if det.radius else reach
    t_max = float(_opt(ns, "t_max", t_default))
    samples = int(_opt(ns, "samples", 513))
    kind = str(_opt(ns, "kind", INTEGRAL))
    t = np.linspace(0.0, t_max, samples)
    proj = forward_analytic(ph, det, t, kind=kind)
    extra = {"phantom": {"dim": dim, "balls": [
        [*b.center, b.radius, b.value] for b in ph.balls
    ]}}
    noise = _opt(ns, "noise")
    if noise is not None:
        seed = int(_opt(ns, "seed", 0))
        proj = add_noise(proj, float(noise), seed)
        extra.update({"noise": float(noise), "seed": seed})
    paths = tio.save_projections(_out_base(ns), proj, extra=extra)
    print(f"projections written: {paths['raw']}")
    return 0


def _recon_varspeed(ns, method: str):
    rec = tio.load_recording(_opt(ns, "data"))
    meta = tio.load_sidecar(_opt(ns, "data")).get("wave")
    if meta is None:
        raise ValidationError("recording sidecar lacks the 'wave' section "
                              "describing domain and speed")
    lo, hi, m = tuple(meta["lo"]), tuple(meta["hi"]), int(meta["m"])
    speed = None
    if meta.get("speed_bump"):
        cx, cy, r, amp = meta["speed_bump"]
        nspec = GridSpec(lo, hi, (m, m), centered=False)
        speed = bump_speed(nspec, (cx, cy), r, amp)
    op = build_operator(lo, hi, m, speed, int(_opt(ns, "modes", 250)))
    if method == "varspeed-operator":
        return recon_operator_form(rec, op)
    gk = boundary_moments(rec, op)
    fk = coefficients_varspeed(gk, rec.t, op.lam, str(_opt(ns, "variant", "C")))
    return recon_varspeed_series(fk, op)


def cmd_recon(ns) -> int:
    method = str(_opt(ns, "method", ""))
    if method in _FBP:
        proj = tio.load_projections(_opt(ns, "data"))
        need = 3 if method in _METHODS_3D else 2
        if proj.dim != need:
            raise ValidationError(
                f"method {method} expects dim {need} data, got dim {proj.dim}"
            )
        m = int(_opt(ns, "grid_m", 128 if need == 2 else 64))
        half = float(_opt(ns, "grid_half", 1.0 if need == 2 else 0.85))
        img = _FBP[method](proj, GridSpec.cube(half, m, need))
    elif method == "series":
        proj = tio.load_projections(_opt(ns, "data"))
        det = proj.detectors
        if det.box is None:
            raise ValidationError(
                "series reconstruction needs rect/box detectors, got "
                f"geometry {det.geometry}"
            )
        lo, hi = det.box
        dim = len(lo)
        m = int(_opt(ns, "grid_m", 128 if dim == 2 else 64))
        spec = GridSpec(lo, hi, (m,) * dim)
        modes = _opt(ns, "modes")
        lam_max = _opt(ns, "lam_max", None if modes else np.pi / spec.spacing)
        basis = rect_eigenbasis(
            lo, hi,
            count=None if modes is None else int(modes),
            lam_max=None if lam_max is None else float(lam_max),
        )
        img = series_sum(series_coefficients(proj, basis), basis, spec)
    elif method in ("varspeed-series", "varspeed-operator"):
        img = _recon_varspeed(ns, method)
    else:
        raise ValidationError(
            f"unknown method {method!r}; choose from "
            f"{sorted(_FBP) + ['series', 'varspeed-series', 'varspeed-operator']}"
        )
    paths = tio.save_image(_out_base(ns), img, extra={"method": method})
    print(f"reconstruction written: {paths['raw']}")
    return 0


def cmd_validate(ns) -> int:
    proj = tio.load_projections(_opt(ns, "data"))
    if proj.kind == INTEGRAL:
        proj = convert_kind(proj, MEAN)
        print("converted integral-kind data to means for the range checks")
    cfg = RangeCheckConfig(
        k_max=int(_opt(ns, "k_max", 5)),
        m_max=int(_opt(ns, "m_max", 8)),
        zeros_per_order=int(_opt(ns, "zeros_per_order", 3)),
        moments_tol=float(_opt(ns, "moments_tol", 1e-3)),
        orthogonality_tol=float(_opt(ns, "orthogonality_tol", 1e-3)),
        bessel_tol=float(_opt(ns, "bessel_tol", 1e-2)),
    )
    report = run_range_checks(proj, cfg)
    for family in ("moments", "orthogonality", "bessel_zeros"):
        res = np.asarray(report[family])
        verdict = "OK" if report[f"{family}_ok"] else "FAIL"
        print(f"{family}: max residual {res.max():.3e}  {verdict}")
    out = _opt(ns, "out")
    if out:
        payload = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                   for k, v in report.items()}
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"report written: {out}")
    if not report["ok"]:
        warnings.warn("data failed one or more range conditions", stacklevel=2)
    return 0


def cmd_compare(ns) -> int:
    a = tio.load_image(_opt(ns, "a"))
    b = tio.load_image(_opt(ns, "b"))
    report = compare_report(a, b)
    mask_radius = _opt(ns, "mask_radius")
    if mask_radius is not None:
        mask = disk_mask(a.spec(), radius=float(mask_radius))
        masked = compare_report(a, b, mask)
        report.update({f"masked_{k}": v for k, v in masked.items()})
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    out = _opt(ns, "out")
    if out:
        Path(out).write_text(text + "\n")
    return 0


def cmd_experiment(ns) -> int:
    name = str(_opt(ns, "name", ""))
    if name not in EXPERIMENTS:
        raise ValidationError(
            f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}"
        )
    kwargs = {}
    if _opt(ns, "m") is not None:
        kwargs["m"] = int(_opt(ns, "m"))
    if name == "partial-data" and _opt(ns, "no_control", False):
        kwargs["include_control"] = False
    result = EXPERIMENTS[name](**kwargs)
    outdir = Path(_opt(ns, "out", f"experiment-{name}"))
    outdir.mkdir(parents=True, exist_ok=True)
    for img_name, img in result["images"].items():
        tio.save_image(outdir / img_name, img)
    payload = dict(result["metrics"])
    payload["passed"] = result["passed"]
    (outdir / "metrics.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    print(f"{name}: {'PASS' if result['passed'] else 'FAIL'} "
          f"(metrics in {outdir / 'metrics.json'})")
    if not result["passed"]:
        warnings.warn(f"experiment {name} missed its acceptance threshold",
                      stacklevel=2)
    return 0


_HANDLERS = {
    "phantom": cmd_phantom,
    "forward": cmd_forward,
    "recon": cmd_recon,
    "validate": cmd_validate,
    "compare": cmd_compare,
    "experiment": cmd_experiment,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tatrec",
        description="Reconstruction toolkit for circular and spherical "
                    "mean data (thermoacoustic tomography).",
    )
    parser.add_argument("--config", help="JSON config; flags override its keys")
    parser.add_argument("--strict", action="store_true", default=None,
                        help="escalate numerical-quality warnings to exit 3")
    parser.add_argument("--threads", type=int,
                        help="cap BLAS/solver worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="rasterize a ball phantom")
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--ball", action="append",
                   help="cx,cy[,cz],radius,value (repeatable)")
    p.add_argument("--grid-m", type=int)
    p.add_argument("--grid-half", type=float)
    p.add_argument("--subsamples", type=int)
    p.add_argument("--out")

    p = sub.add_parser("forward", help="projections of a phantom, or wave data")
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--ball", action="append")
    p.add_argument("--geometry", choices=(CIRCLE, ARC, SPHERE, RECT, BOX))
    p.add_argument("--radius", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--span", type=float)
    p.add_argument("--start", type=float)
    p.add_argument("--box-lo")
    p.add_argument("--box-hi")
    p.add_argument("--t-max", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--kind", choices=(INTEGRAL, MEAN))
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--wave", action="store_true", default=None,
                   help="record boundary pressure of the wave equation "
                        "instead of spherical means")
    p.add_argument("--source-bump", action="append",
                   help="cx,cy,r,amp smooth source (wave mode, repeatable)")
    p.add_argument("--speed-bump", help="cx,cy,r,amp sound-speed bump")
    p.add_argument("--grid-m", type=int)
    p.add_argument("--grid-half", type=float)
    p.add_argument("--subsamples", type=int)
    p.add_argument("--big-t", type=float, dest="big_t",
                   help="recording window T (wave mode)")
    p.add_argument("--cfl", type=float)
    p.add_argument("--out")

    p = sub.add_parser("recon", help="reconstruct an image from data")
    p.add_argument("--method")
    p.add_argument("--data")
    p.add_argument("--grid-m", type=int)
    p.add_argument("--grid-half", type=float)
    p.add_argument("--modes", type=int)
    p.add_argument("--lam-max", type=float)
    p.add_argument("--variant", choices=("A", "B", "C"))
    p.add_argument("--out")

    p = sub.add_parser("validate", help="range conditions on 2D disk data")
    p.add_argument("--data")
    p.add_argument("--k-max", type=int)
    p.add_argument("--m-max", type=int)
    p.add_argument("--zeros-per-order", type=int)
    p.add_argument("--moments-tol", type=float)
    p.add_argument("--orthogonality-tol", type=float)
    p.add_argument("--bessel-tol", type=float)
    p.add_argument("--out")

    p = sub.add_parser("compare", help="norms of the difference of two images")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--mask-radius", type=float)
    p.add_argument("--out")

    p = sub.add_parser("experiment", help="run a canned study")
    p.add_argument("--name", choices=sorted(EXPERIMENTS))
    p.add_argument("--m", type=int)
    p.add_argument("--no-control", action="store_true", default=None)
    p.add_argument("--out")
    return parser


def _merge_config(ns) -> None:
    if not getattr(ns, "config", None):
        return
    cfg = json.loads(Path(ns.config).read_text())
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if getattr(ns, attr, None) is None:
            setattr(ns, attr, value)


def main(argv=None) -> int:
    ns = _build_parser().parse_args(argv)
    try:
        _merge_config(ns)
        if getattr(ns, "threads", None):
            from threadpoolctl import threadpool_limits

            limiter = threadpool_limits(limits=int(ns.threads))  # noqa: F841
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rc = _HANDLERS[ns.command](ns)
        for w in caught:
            print(f"WARN: {w.message}", file=sys.stderr)
        if caught and _opt(ns, "strict", False):
            return 3
        return rc
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
