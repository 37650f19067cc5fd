"""Forward warping (splatting) and backward warping on dense grids.

A source pixel q carrying value I[q] and displacement F[q] covers up to four
target pixels around its continuous destination q + F[q]; each covered pixel
p receives the value scaled by the bilinear tent weight

    b(u) = max(0, 1 - |u_x|) * max(0, 1 - |u_y|),    u = p - (q + F[q]).

Four splat modes share this footprint and differ in how colliding
contributions combine:

* summation  -- plain accumulation of b * I; weight map is the accumulated b.
* average    -- summation of both value and weight, value divided by weight.
* linear     -- contributions scaled by a caller-supplied importance z.
* softmax    -- contributions scaled by exp(z - max z); the shift makes the
                exponentials safe and cancels in the normalization, so adding
                any constant to z leaves the result unchanged.

Normalized modes mark a target pixel a hole when the accumulated weight
magnitude is at or below coverage_epsilon(dtype); holes get value 0 and
weight 0.  Footprints reaching outside the grid are dropped, not clamped.

All operations accept `workers` (thread count for the numba backend; the
numpy fallback is sequential) and `backend` (overrides SOFTSPLAT_BACKEND).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .errors import InternalError, InvalidArgumentError
from .grids import FlowField, ImageGrid, ImportanceMap

MODES = ("summation", "average", "linear", "softmax")

_EPS = {np.dtype(np.float32): 1e-7, np.dtype(np.float64): 1e-12}
_DZ_KIND = {"summation": 0, "average": 0, "linear": 1, "softmax": 2}


def coverage_epsilon(dtype):
    """Weight magnitude at or below which a target pixel counts as a hole."""
    try:
        return _EPS[np.dtype(dtype)]
    except KeyError:
        raise InvalidArgumentError(f"no coverage epsilon for dtype {dtype!r}") from None


@dataclass(frozen=True)
class WarpOutput:
    """Result of a splat: warped values plus the per-pixel splat weight.

    For normalized modes the weight is the pre-normalization denominator,
    zeroed at holes; for summation it is the accumulated bilinear mass.
    """

    warped: ImageGrid
    weight: ImportanceMap
    mode: str


@dataclass(frozen=True)
class GradientBundle:
    """Gradients of a splat w.r.t. its inputs, one entry per input.

    d_importance is None for modes that take no importance map.
    """

    d_source: ImageGrid
    d_flow: FlowField
    d_importance: Optional[ImportanceMap]


class _Footprint(NamedTuple):
    height: int
    width: int
    ixi: np.ndarray     # floor of target x, per flattened source pixel
    iyi: np.ndarray
    wxl: np.ndarray     # bilinear weight toward the left / right column
    wxr: np.ndarray
    wyt: np.ndarray     # and toward the top / bottom row
    wyb: np.ndarray
    xact: np.ndarray    # fractional x nonzero: flow-x gradient is defined
    yact: np.ndarray
    valid: np.ndarray   # footprint touches the grid at all
    qidx: np.ndarray    # valid source pixels grouped by top target row
    starts: np.ndarray  # bin boundaries into qidx, one bin per grid row + 1


def _footprint(dxa, dya, height, width):
    """Precompute per-source-pixel footprint geometry, flattened row-major."""
    dt = dxa.dtype
    xs = np.arange(width, dtype=dt)[None, :]
    ys = np.arange(height, dtype=dt)[:, None]
    tx = (xs + dxa).ravel()
    ty = (ys + dya).ravel()
    valid = (tx > -1.0) & (tx < width) & (ty > -1.0) & (ty < height)
    # clamp before the integer cast so huge displacements cannot overflow;
    # every clamped pixel is invalid and never contributes
    tx = np.clip(tx, -4.0, width + 4.0)
    ty = np.clip(ty, -4.0, height + 4.0)
    ix = np.floor(tx)
    iy = np.floor(ty)
    fx = tx - ix
    fy = ty - iy
    ixi = ix.astype(np.int64)
    iyi = iy.astype(np.int64)
    rows = (iyi + 1)[valid]
    order = np.argsort(rows, kind="stable")
    qidx = np.flatnonzero(valid)[order].astype(np.int64)
    starts = np.searchsorted(rows[order], np.arange(height + 2)).astype(np.int64)
    return _Footprint(
        height=height, width=width, ixi=ixi, iyi=iyi,
        wxl=1.0 - fx, wxr=fx, wyt=1.0 - fy, wyb=fy,
        xact=fx != 0.0, yact=fy != 0.0,
        valid=valid, qidx=qidx, starts=starts,
    )


def _freeze(arr):
    arr.setflags(write=False)
    return arr


def _ensure_finite(context, **named):
    for label, arr in named.items():
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        if bad:
            raise InternalError(
                f"{context} produced {bad} non-finite values in {label}; "
                "inputs were validated finite, so an intermediate overflowed"
            )


def _check_pair(source, flow):
    if not isinstance(source, ImageGrid):
        raise InvalidArgumentError(
            f"source must be an ImageGrid, got {type(source).__name__}"
        )
    if not isinstance(flow, FlowField):
        raise InvalidArgumentError(
            f"flow must be a FlowField, got {type(flow).__name__}"
        )
    if (source.height, source.width) != (flow.height, flow.width):
        raise InvalidArgumentError(
            f"source extent {(source.height, source.width)} does not match "
            f"flow extent {(flow.height, flow.width)}"
        )


def _check_op_inputs(source, flow, mode, importance):
    _check_pair(source, flow)
    if mode not in MODES:
        raise InvalidArgumentError(f"unknown mode {mode!r}; choose one of {MODES}")
    if mode in ("linear", "softmax"):
        if importance is None:
            raise InvalidArgumentError(f"mode {mode!r} requires an importance map")
        if not isinstance(importance, ImportanceMap):
            raise InvalidArgumentError(
                f"importance must be an ImportanceMap, got {type(importance).__name__}"
            )
        if (importance.height, importance.width) != (source.height, source.width):
            raise InvalidArgumentError(
                f"importance extent {(importance.height, importance.width)} does "
                f"not match source extent {(source.height, source.width)}"
            )
    elif importance is not None:
        raise InvalidArgumentError(f"mode {mode!r} does not take an importance map")


def _cast_op_arrays(source, flow, importance, extra=()):
    parts = [source.data, flow.data]
    if importance is not None:
        parts.append(importance.data)
    parts.extend(extra)
    dt = np.result_type(*parts)
    src3 = np.ascontiguousarray(source.data.astype(dt, copy=False))
    dxa = np.ascontiguousarray(flow.data[:, :, 0].astype(dt, copy=False))
    dya = np.ascontiguousarray(flow.data[:, :, 1].astype(dt, copy=False))
    z2 = None
    if importance is not None:
        z2 = np.ascontiguousarray(importance.data.astype(dt, copy=False))
    return src3, dxa, dya, z2, dt


def _mode_weights(mode, z2, count, dt):
    """Per-source-pixel combination weight wq for the normalized modes."""
    if mode == "average":
        return np.ones(count, dtype=dt)
    z = z2.ravel()
    if mode == "linear":
        return np.ascontiguousarray(z)
    # softmax: shift by the global max so the largest exponential is exactly
    # 1.0; the shift cancels in the normalization
    return np.exp(z - z.max())


def splat(source, flow, mode, importance=None, *, workers=None, backend=None):
    """Forward-warp source along flow, combining collisions per `mode`.

    Returns a WarpOutput.  Preconditions: source and flow share spatial
    extent; linear/softmax require `importance` of the same extent, the other
    modes forbid it.
    """
    _check_op_inputs(source, flow, mode, importance)
    src3, dxa, dya, z2, dt = _cast_op_arrays(source, flow, importance)
    impl = _kernels.get_backend(backend)
    height, width, channels = src3.shape
    fp = _footprint(dxa, dya, height, width)
    src2 = src3.reshape(-1, channels)
    if mode == "summation":
        vals = np.empty((height * width, channels + 1), dtype=dt)
        vals[:, :channels] = src2
        vals[:, channels] = 1.0
        raw = impl.scatter(vals, fp, workers)
        warped = np.ascontiguousarray(raw[:, :, :channels])
        weight = np.ascontiguousarray(raw[:, :, channels])
    else:
        wq = _mode_weights(mode, z2, height * width, dt)
        den = impl.scatter(wq[:, None], fp, workers)[:, :, 0]
        covered = np.abs(den) > coverage_epsilon(dt)
        warped = impl.scatter_norm(src2, wq, den, covered, fp, workers)
        weight = np.where(covered, den, 0.0).astype(dt, copy=False)
    _ensure_finite(f"splat[{mode}]", warped=warped, weight=weight)
    return WarpOutput(
        warped=ImageGrid(_freeze(warped)),
        weight=ImportanceMap(_freeze(weight)),
        mode=mode,
    )


def splat_backward(source, flow, mode, upstream, importance=None, *,
                   workers=None, backend=None):
    """Gradients of splat(source, flow, mode, importance) against `upstream`.

    `upstream` must be an ImageGrid shaped like the forward output (which is
    shaped like the source).  Returns a GradientBundle; d_importance is None
    for summation and average.  Where the fractional part of a target
    coordinate is exactly zero the flow gradient of that component is taken
    as 0 (the kernel is only subdifferentiable there); gradients do not flow
    into or out of hole pixels.
    """
    _check_op_inputs(source, flow, mode, importance)
    if not isinstance(upstream, ImageGrid):
        raise InvalidArgumentError(
            f"upstream must be an ImageGrid, got {type(upstream).__name__}"
        )
    if upstream.data.shape != source.data.shape:
        raise InvalidArgumentError(
            f"upstream shape {upstream.data.shape} does not match "
            f"source shape {source.data.shape}"
        )
    src3, dxa, dya, z2, dt = _cast_op_arrays(
        source, flow, importance, extra=(upstream.data,)
    )
    impl = _kernels.get_backend(backend)
    height, width, channels = src3.shape
    count = height * width
    fp = _footprint(dxa, dya, height, width)
    src2 = src3.reshape(-1, channels)
    g3 = np.ascontiguousarray(upstream.data.astype(dt, copy=False))
    if mode == "summation":
        den = np.ones((height, width), dtype=dt)
        covered = np.ones((height, width), dtype=bool)
        outn = np.zeros((height, width, channels), dtype=dt)
        wq = np.ones(count, dtype=dt)
    else:
        wq = _mode_weights(mode, z2, count, dt)
        den = impl.scatter(wq[:, None], fp, workers)[:, :, 0]
        covered = np.abs(den) > coverage_epsilon(dt)
        outn = impl.scatter_norm(src2, wq, den, covered, fp, workers)
    ds2, dfx, dfy, dz = impl.gather_backward(
        src2, g3, den, covered, outn, wq, _DZ_KIND[mode], fp, workers
    )
    d_source = ds2.reshape(height, width, channels)
    d_flow = np.stack([dfx.reshape(height, width), dfy.reshape(height, width)], axis=-1)
    _ensure_finite(f"splat_backward[{mode}]", d_source=d_source, d_flow=d_flow)
    d_importance = None
    if dz is not None:
        dzg = dz.reshape(height, width)
        _ensure_finite(f"splat_backward[{mode}]", d_importance=dzg)
        d_importance = ImportanceMap(_freeze(dzg))
    return GradientBundle(
        d_source=ImageGrid(_freeze(np.ascontiguousarray(d_source))),
        d_flow=FlowField(_freeze(np.ascontiguousarray(d_flow))),
        d_importance=d_importance,
    )


def backward_warp(source, flow, *, workers=None, backend=None):
    """Sample source at p + flow[p] for every pixel p (zero outside).

    The flow here is target-centric: it lives on the output grid and points
    back into the source.  Hole-free by construction.
    """
    _check_pair(source, flow)
    src3, dxa, dya, _, dt = _cast_op_arrays(source, flow, None)
    impl = _kernels.get_backend(backend)
    height, width, _ = src3.shape
    sx = np.arange(width, dtype=dt)[None, :] + dxa
    sy = np.arange(height, dtype=dt)[:, None] + dya
    out = impl.bilinear_gather(src3, sx, sy, workers)
    _ensure_finite("backward_warp", out=out)
    return ImageGrid(_freeze(np.ascontiguousarray(out)))
