"""Timing harness for the warping kernels.

Each case is timed over `reps` repetitions (at least 5) after a warm-up
run, so JIT compilation never lands in a measured repetition.  Records
report the median and 95th-percentile wall time plus a checksum of the
outputs, which makes determinism across worker counts and backends
directly comparable.  The protocol row runs softmax splatting on a
1920x1080x3 single-precision frame with N(0, 10^2) flow components;
published GPU reference timings are attached to protocol records as
context only and are never compared against.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import time

import numpy as np

from ._kernels import available_backends
from .errors import InvalidArgumentError
from .grids import FlowField, ImageGrid, ImportanceMap, dtype_for
from .metric import MetricParams, brightness_constancy
from .warp import MODES, backward_warp, splat

MIN_REPS = 5
PROTOCOL_SHAPE = (1080, 1920, 3)
PROTOCOL_FLOW_SIGMA = 10.0
# Published reference timings (milliseconds, GPU implementation); context only.
REFERENCE_MS = {"backward_warp": 1.1, "splat_softmax": 3.7}


def host_record():
    try:
        import numba
        numba_version = numba.__version__
    except Exception:
        numba_version = None
    return {
        "kind": "host",
        "platform": platform.platform(),
        "machine": platform.machine(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba_version,
        "cpu_count": os.cpu_count(),
        "backends": list(available_backends()),
    }


def _checksum(*arrays):
    h = hashlib.sha256()
    for arr in arrays:
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def _case_inputs(height, width, channels, precision, flow_sigma, seed):
    rng = np.random.default_rng(seed)
    dt = dtype_for(precision)
    src = ImageGrid.from_array(rng.random((height, width, channels)).astype(dt))
    flow = FlowField.from_array(
        rng.normal(0.0, flow_sigma, (height, width, 2)).astype(dt)
    )
    z = ImportanceMap.from_array(rng.normal(0.0, 1.0, (height, width)).astype(dt))
    ref = ImageGrid.from_array(rng.random((height, width, channels)).astype(dt))
    return src, flow, z, ref


def run_case(op, *, height, width, channels=3, mode="softmax", precision="single",
             workers=1, backend=None, reps=MIN_REPS, flow_sigma=PROTOCOL_FLOW_SIGMA,
             seed=0):
    """Time one operation; returns a JSON-serializable record."""
    if reps < MIN_REPS:
        raise InvalidArgumentError(f"reps must be at least {MIN_REPS}, got {reps}")
    if op not in ("splat", "backward_warp", "splat_with_metric"):
        raise InvalidArgumentError(f"unknown benchmark op {op!r}")
    src, flow, z, ref = _case_inputs(height, width, channels, precision, flow_sigma, seed)
    needs_z = mode in ("linear", "softmax")

    if op == "splat":
        def body():
            return splat(src, flow, mode=mode, importance=z if needs_z else None,
                         workers=workers, backend=backend)
        def digest(out):
            return _checksum(out.warped.data, out.weight.data)
    elif op == "backward_warp":
        def body():
            return backward_warp(src, flow, workers=workers, backend=backend)
        def digest(out):
            return _checksum(out.data)
    else:
        params = MetricParams(alpha=-1.0)
        def body():
            zz = brightness_constancy(src, ref, flow, params,
                                      workers=workers, backend=backend)
            return splat(src, flow, mode="softmax", importance=zz,
                         workers=workers, backend=backend)
        def digest(out):
            return _checksum(out.warped.data, out.weight.data)

    out = body()  # warm-up; also compiles the kernels on first use
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        out = body()
        times.append(time.perf_counter() - t0)
    times = np.asarray(times)
    record = {
        "kind": "case",
        "op": op,
        "mode": mode if op != "backward_warp" else None,
        "height": height,
        "width": width,
        "channels": channels,
        "precision": precision,
        "workers": workers,
        "backend": backend or "auto",
        "reps": int(reps),
        "median_ms": float(np.median(times) * 1e3),
        "p95_ms": float(np.percentile(times, 95) * 1e3),
        "checksum": digest(out),
    }
    return record


def protocol_records(*, workers=1, backend=None, reps=MIN_REPS, seed=0):
    """The fixed 1080p N(0, 10^2) rows, annotated with reference timings."""
    height, width, channels = PROTOCOL_SHAPE
    rows = []
    for op, ref_key in (("backward_warp", "backward_warp"),
                        ("splat", "splat_softmax"),
                        ("splat_with_metric", None)):
        rec = run_case(op, height=height, width=width, channels=channels,
                       mode="softmax", precision="single", workers=workers,
                       backend=backend, reps=reps,
                       flow_sigma=PROTOCOL_FLOW_SIGMA, seed=seed)
        rec["protocol"] = True
        if ref_key is not None:
            rec["reference_ms"] = REFERENCE_MS[ref_key]
            rec["reference_note"] = "published GPU timing, context only"
        rows.append(rec)
    return rows


def run_bench(*, sizes=((256, 256),), modes=MODES, workers=(1,), backends=None,
              channels=3, precision="single", reps=MIN_REPS, protocol=True,
              seed=0):
    """Run the benchmark grid plus (optionally) the protocol rows.

    Yields records one at a time so callers can stream them as JSON lines.
    """
    if backends is None:
        backends = available_backends()
    yield host_record()
    for backend in backends:
        for height, width in sizes:
            for wk in workers:
                for mode in modes:
                    yield run_case("splat", height=height, width=width,
                                   channels=channels, mode=mode,
                                   precision=precision, workers=wk,
                                   backend=backend, reps=reps, seed=seed)
                yield run_case("backward_warp", height=height, width=width,
                               channels=channels, precision=precision,
                               workers=wk, backend=backend, reps=reps, seed=seed)
    if protocol:
        for rec in protocol_records(workers=max(workers), backend=backends[0],
                                    reps=reps, seed=seed):
            yield rec


def format_record(rec):
    return json.dumps(rec, sort_keys=True)
