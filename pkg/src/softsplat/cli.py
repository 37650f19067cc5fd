"""Command-line interface.

Subcommands: warp, interpolate, sweep, gradcheck, bench, make-scene.  Every
subcommand writes one JSON record per logical result line to stdout (and to
--report FILE when given), so runs are machine-parseable as emitted.  On
error, a single diagnostic line goes to stderr and the exit code is
nonzero; exit code 0 means the run completed without error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bench import MIN_REPS, run_bench
from .config import resolve_config
from .errors import InvalidArgumentError, SplatError
from .grids import ImportanceMap, scale_flow
from .interp import InterpolationRequest, interpolate, sweep_times, temporal_sweep
from .io import (read_flo, read_image, read_importance, write_flo, write_image,
                 write_pfm)
from .metric import MetricParams, brightness_constancy
from .oracle import DEFAULT_OP_NAMES, run_gradcheck
from .scenes import SCENE_KINDS, make_scene
from .warp import MODES, splat


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def _emit(record, report):
    line = json.dumps(record, sort_keys=True, default=_json_default)
    print(line)
    if report is not None:
        report.write(line + "\n")


def _add_common(p, *, times=False):
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--alpha", type=float, default=None)
    if times:
        p.add_argument("--t", default=None,
                       help="comma-separated time stations in (0,1)")
    p.add_argument("--precision", choices=("single", "double"), default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--backend", default=None)
    p.add_argument("--report", default=None, help="also append records to this file")


def _truth_path(truth_dir, k):
    return os.path.join(truth_dir, f"t_{k:03d}.png")


def cmd_warp(args, report):
    cfg = resolve_config(args)
    src = read_image(args.infile, cfg.precision)
    flow = read_flo(args.flow)
    if args.z is not None and args.auto_z:
        raise InvalidArgumentError("--z and --auto-z are mutually exclusive")
    importance = None
    if args.z is not None:
        importance = read_importance(args.z)
    elif args.auto_z:
        if args.ref is None:
            raise InvalidArgumentError(
                "--auto-z derives importance from brightness constancy and "
                "needs the second frame; pass --ref"
            )
        ref = read_image(args.ref, cfg.precision)
        importance = brightness_constancy(
            src, ref, flow, MetricParams(alpha=cfg.alpha),
            workers=cfg.workers, backend=cfg.backend,
        )
    t = args.t_scale
    warp_flow = scale_flow(flow, t) if t != 1.0 else flow
    out = splat(src, warp_flow, mode=cfg.mode, importance=importance,
                workers=cfg.workers, backend=cfg.backend)
    write_image(out.warped, args.out, bits=args.bits)
    if args.weight_out is not None:
        write_pfm(out.weight, args.weight_out)
    _emit({
        "kind": "warp", "mode": cfg.mode, "t": t,
        "height": src.height, "width": src.width, "channels": src.channels,
        "covered_fraction": float(np.mean(out.weight.data != 0.0)),
        "out": args.out,
    }, report)
    return 0


def _load_pair(args, cfg):
    if getattr(args, "scene", None):
        base = args.scene
        i0 = read_image(os.path.join(base, "i0.png"), cfg.precision)
        i1 = read_image(os.path.join(base, "i1.png"), cfg.precision)
        flow01 = read_flo(os.path.join(base, "flow01.flo"))
        flow10 = read_flo(os.path.join(base, "flow10.flo"))
        return i0, i1, flow01, flow10
    missing = [name for name in ("i0", "i1", "flow01", "flow10")
               if getattr(args, name) is None]
    if missing:
        raise InvalidArgumentError(
            f"missing inputs: {', '.join('--' + m for m in missing)} "
            "(or pass --scene DIR)"
        )
    return (read_image(args.i0, cfg.precision), read_image(args.i1, cfg.precision),
            read_flo(args.flow01), read_flo(args.flow10))


def cmd_interpolate(args, report):
    cfg = resolve_config(args)
    i0, i1, flow01, flow10 = _load_pair(args, cfg)
    req = InterpolationRequest(i0=i0, i1=i1, flow01=flow01, flow10=flow10,
                               times=cfg.times, mode=cfg.mode,
                               params=MetricParams(alpha=cfg.alpha))
    outputs = interpolate(req, workers=cfg.workers, backend=cfg.backend)
    os.makedirs(args.out_dir, exist_ok=True)
    for k, (t, out) in enumerate(zip(cfg.times, outputs)):
        path = os.path.join(args.out_dir, f"frame_{k:03d}.png")
        write_image(out.frame, path, bits=args.bits)
        _emit({
            "kind": "frame", "index": k, "t": t, "mode": cfg.mode,
            "hole_fraction": float(out.hole_mask.data.mean()),
            "path": path,
        }, report)
    return 0


def cmd_sweep(args, report):
    cfg = resolve_config(args)
    i0, i1, flow01, flow10 = _load_pair(args, cfg)
    times = sweep_times(args.steps)
    truth_dir = args.truth
    if truth_dir is None and getattr(args, "scene", None):
        candidate = os.path.join(args.scene, "truth")
        if os.path.isdir(candidate):
            truth_dir = candidate
    reference = None
    if truth_dir is not None:
        reference = []
        for k in range(1, args.steps):
            path = _truth_path(truth_dir, k)
            if not os.path.exists(path):
                raise InvalidArgumentError(
                    f"missing ground-truth frame {path} for station t={k}/{args.steps}"
                )
            reference.append(read_image(path, cfg.precision))
    req = InterpolationRequest(i0=i0, i1=i1, flow01=flow01, flow10=flow10,
                               times=times, mode=cfg.mode,
                               params=MetricParams(alpha=cfg.alpha))
    records, _ = temporal_sweep(req, reference, workers=cfg.workers,
                                backend=cfg.backend)
    for rec in records:
        _emit({
            "kind": "sweep", "t": rec.t, "psnr": rec.psnr,
            "hole_fraction": rec.hole_fraction,
            "mean_weight0": rec.mean_weight0, "mean_weight1": rec.mean_weight1,
        }, report)
    if reference is not None:
        values = [rec.psnr for rec in records]
        _emit({
            "kind": "sweep-summary", "steps": args.steps, "mode": cfg.mode,
            "psnr_min": min(values), "psnr_max": max(values),
            "psnr_spread": max(values) - min(values),
        }, report)
    return 0


def cmd_gradcheck(args, report):
    cfg = resolve_config(args, for_gradcheck=True)
    if cfg.precision != "double":
        raise InvalidArgumentError(
            "finite differences need double precision; do not lower it"
        )
    op_names = None
    if args.ops is not None:
        op_names = tuple(tok.strip() for tok in args.ops.split(",") if tok.strip())
    reports = run_gradcheck(op_names, instances=args.instances, seed=args.seed,
                            step=args.step, tolerance=args.tolerance,
                            workers=cfg.workers, backend=cfg.backend)
    for rep in reports:
        _emit({
            "kind": "gradcheck", "op": rep.op_name,
            "max_rel_error": rep.max_rel_error,
            "worst_coordinate": list(rep.worst_coordinate)
            if rep.worst_coordinate is not None else None,
            "num_probes": rep.num_probes, "passed": rep.passed,
        }, report)
    failed = [rep.op_name for rep in reports if not rep.passed]
    if failed:
        print(f"softsplat: gradient check failed for: {', '.join(failed)}",
              file=sys.stderr)
        return 1
    return 0


def _parse_sizes(text):
    sizes = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        try:
            w_str, h_str = tok.split("x") if "x" in tok else (tok, tok)
            width, height = int(w_str), int(h_str)
        except ValueError as exc:
            raise InvalidArgumentError(
                f"could not parse size {tok!r}; expected WIDTHxHEIGHT"
            ) from exc
        sizes.append((height, width))
    if not sizes:
        raise InvalidArgumentError(f"no sizes found in {text!r}")
    return tuple(sizes)


def cmd_bench(args, report):
    cfg = resolve_config(args)
    sizes = _parse_sizes(args.sizes)
    workers = tuple(int(tok) for tok in str(args.bench_workers).split(",") if tok)
    modes = tuple(tok for tok in args.modes.split(",") if tok) if args.modes else MODES
    for mode in modes:
        if mode not in MODES:
            raise InvalidArgumentError(f"unknown mode {mode!r}; expected one of {MODES}")
    backends = tuple(args.backends.split(",")) if args.backends else None
    for rec in run_bench(sizes=sizes, modes=modes, workers=workers,
                         backends=backends, channels=args.channels,
                         precision=cfg.precision, reps=args.reps,
                         protocol=not args.no_protocol, seed=args.seed):
        _emit(rec, report)
    return 0


def cmd_make_scene(args, report):
    bundle = make_scene(args.kind, size=args.size, shift=args.shift)
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    write_image(bundle.i0, os.path.join(out_dir, "i0.png"), bits=args.bits)
    write_image(bundle.i1, os.path.join(out_dir, "i1.png"), bits=args.bits)
    write_flo(bundle.flow01, os.path.join(out_dir, "flow01.flo"))
    write_flo(bundle.flow10, os.path.join(out_dir, "flow10.flo"))
    truth_paths = {}
    if bundle.truth:
        truth_dir = os.path.join(out_dir, "truth")
        os.makedirs(truth_dir, exist_ok=True)
        for j, frame in sorted(bundle.truth.items()):
            path = _truth_path(truth_dir, j)
            write_image(frame, path, bits=args.bits)
            truth_paths[str(j)] = path
    manifest = {
        "kind": bundle.kind, "size": args.size, "shift": bundle.shift,
        "bits": args.bits, "truth": truth_paths,
    }
    with open(os.path.join(out_dir, "scene.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    _emit({"kind": "scene", "scene_kind": bundle.kind, "size": args.size,
           "shift": bundle.shift, "out": out_dir,
           "truth_frames": len(truth_paths)}, report)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="softsplat",
        description="Differentiable forward warping by softmax splatting.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("warp", help="forward-warp one frame along a flow")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--flow", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--z", default=None, help="importance map (PFM, Pf)")
    p.add_argument("--auto-z", action="store_true",
                   help="derive importance from brightness constancy (needs --ref)")
    p.add_argument("--ref", default=None, help="second frame for --auto-z")
    p.add_argument("--t", dest="t_scale", type=float, default=1.0,
                   help="scale the flow by t before warping (default 1.0)")
    p.add_argument("--weight-out", default=None, help="write the weight map (PFM)")
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)
    _add_common(p)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("interpolate", help="synthesize intermediate frames")
    p.add_argument("--i0", default=None)
    p.add_argument("--i1", default=None)
    p.add_argument("--flow01", default=None)
    p.add_argument("--flow10", default=None)
    p.add_argument("--scene", default=None, help="read inputs from a make-scene directory")
    p.add_argument("--out-dir", default="frames")
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)
    _add_common(p, times=True)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("sweep", help="interpolate a full time sweep and summarize")
    p.add_argument("--i0", default=None)
    p.add_argument("--i1", default=None)
    p.add_argument("--flow01", default=None)
    p.add_argument("--flow10", default=None)
    p.add_argument("--scene", default=None, help="read inputs from a make-scene directory")
    p.add_argument("--steps", type=int, default=32)
    p.add_argument("--truth", default=None,
                   help="directory of ground-truth frames t_001.png .. t_{steps-1}.png")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--ops", default=None,
                   help=f"comma-separated subset of {', '.join(DEFAULT_OP_NAMES)}")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-6)
    p.add_argument("--tolerance", type=float, default=1e-4)
    _add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="time the kernels and emit records")
    p.add_argument("--sizes", default="256x256")
    p.add_argument("--workers", dest="bench_workers", default="1")
    p.add_argument("--modes", default=None)
    p.add_argument("--backends", default=None)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--reps", type=int, default=MIN_REPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-protocol", action="store_true",
                   help="skip the 1080p protocol rows")
    p.add_argument("--precision", choices=("single", "double"), default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("make-scene", help="write a synthetic scene with exact flows")
    p.add_argument("--kind", required=True, choices=SCENE_KINDS)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--shift", type=float, default=8)
    p.add_argument("--out", default="scene")
    p.add_argument("--bits", type=int, choices=(8, 16), default=16)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_make_scene)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    report = None
    try:
        if getattr(args, "report", None):
            report = open(args.report, "a")
        return args.func(args, report)
    except SplatError as exc:
        print(f"softsplat: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"softsplat: error: {exc}", file=sys.stderr)
        return 1
    finally:
        if report is not None:
            report.close()


if __name__ == "__main__":
    sys.exit(main())
