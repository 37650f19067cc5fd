"""Two-frame interpolation: warp both frames to time t, then fuse.

Given frames i0, i1 and the two inter-frame flows, each requested time
t in (0, 1) is synthesized by splatting i0 along t * flow01 and i1 along
(1 - t) * flow10, then blending the two warped branches with a closed-form
time-and-coverage weighting:

    frame[p] = (w0 * (1-t) * warp0[p] + w1 * t * warp1[p])
               / (w0 * (1-t) + w1 * t)

where w0, w1 are the per-pixel splat weight maps.  A pixel covered by only
one branch takes that branch's value outright; a pixel covered by neither is
a hole (value 0, hole_mask 1).  Holes are reported, never inpainted: filling
them is a synthesis network's job and silent filling would mask warp bugs.

Branch importance defaults to the mirrored brightness-constancy metric
(Z0 from (i0, i1, flow01), Z1 from (i1, i0, flow10)); a request may carry
precomputed maps instead, so an externally learned metric can be plugged in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .grids import FlowField, ImageGrid, ImportanceMap, scale_flow
from .metric import MetricParams, brightness_constancy
from .warp import MODES, coverage_epsilon, splat


@dataclass(frozen=True)
class InterpolationRequest:
    """Everything needed to synthesize intermediate frames.

    times must be strictly inside (0, 1).  z0 / z1 override the computed
    importance maps for the respective branch (ignored by modes that take no
    importance).
    """

    i0: ImageGrid
    i1: ImageGrid
    flow01: FlowField
    flow10: FlowField
    times: tuple
    mode: str = "softmax"
    params: MetricParams = field(default_factory=MetricParams)
    z0: Optional[ImportanceMap] = None
    z1: Optional[ImportanceMap] = None

    def __post_init__(self):
        for label, grid in (("i0", self.i0), ("i1", self.i1)):
            if not isinstance(grid, ImageGrid):
                raise InvalidArgumentError(
                    f"{label} must be an ImageGrid, got {type(grid).__name__}"
                )
        if self.i0.data.shape != self.i1.data.shape:
            raise InvalidArgumentError(
                f"i0 shape {self.i0.data.shape} does not match i1 shape "
                f"{self.i1.data.shape}"
            )
        extent = (self.i0.height, self.i0.width)
        for label, flow in (("flow01", self.flow01), ("flow10", self.flow10)):
            if not isinstance(flow, FlowField):
                raise InvalidArgumentError(
                    f"{label} must be a FlowField, got {type(flow).__name__}"
                )
            if (flow.height, flow.width) != extent:
                raise InvalidArgumentError(
                    f"{label} extent {(flow.height, flow.width)} does not "
                    f"match frame extent {extent}"
                )
        times = tuple(float(t) for t in self.times)
        if not times:
            raise InvalidArgumentError("times must be a non-empty list")
        for t in times:
            if not (0.0 < t < 1.0) or not np.isfinite(t):
                raise InvalidArgumentError(
                    f"every t must lie strictly in (0, 1), got {t!r}"
                )
        object.__setattr__(self, "times", times)
        if self.mode not in MODES:
            raise InvalidArgumentError(
                f"unknown mode {self.mode!r}; choose one of {MODES}"
            )
        if not isinstance(self.params, MetricParams):
            raise InvalidArgumentError(
                f"params must be MetricParams, got {type(self.params).__name__}"
            )
        for label, zmap in (("z0", self.z0), ("z1", self.z1)):
            if zmap is None:
                continue
            if not isinstance(zmap, ImportanceMap):
                raise InvalidArgumentError(
                    f"{label} must be an ImportanceMap, got {type(zmap).__name__}"
                )
            if (zmap.height, zmap.width) != extent:
                raise InvalidArgumentError(
                    f"{label} extent {(zmap.height, zmap.width)} does not "
                    f"match frame extent {extent}"
                )


@dataclass(frozen=True)
class FusionOutput:
    """One synthesized frame plus its diagnostic maps.

    per_side_weights are the final contribution shares of the warped-i0 and
    warped-i1 branches; they sum to exactly 1 at non-hole pixels and are 0
    at holes (where hole_mask is 1 and the frame value is 0).
    """

    frame: ImageGrid
    hole_mask: ImageGrid
    per_side_weights: tuple


def fuse_pair(warp0, weight0, warp1, weight1, t):
    """Blend two warped branches at time t per the fusion formula above.

    A branch counts as covering a pixel when its weight exceeds the coverage
    epsilon (negative linear-mode weights count as uncovered).  Where both
    branches covered a pixel with identical values, the shared value is used
    directly, which keeps static scenes bit-exact fixed points.
    """
    if warp0.data.shape != warp1.data.shape:
        raise InvalidArgumentError(
            f"branch shapes differ: {warp0.data.shape} vs {warp1.data.shape}"
        )
    if not (0.0 < t < 1.0):
        raise InvalidArgumentError(f"t must lie strictly in (0, 1), got {t!r}")
    dt = np.result_type(warp0.data, warp1.data, weight0.data, weight1.data)
    v0 = warp0.data.astype(dt, copy=False)
    v1 = warp1.data.astype(dt, copy=False)
    w0 = weight0.data.astype(dt, copy=False)
    w1 = weight1.data.astype(dt, copy=False)
    eps = coverage_epsilon(dt)
    c0 = w0 > eps
    c1 = w1 > eps
    both = c0 & c1
    a0 = w0 * dt.type(1.0 - t)
    a1 = w1 * dt.type(t)
    denom = np.where(both, a0 + a1, 1.0)
    s0 = np.where(both, a0 / denom, 0.0)
    s1 = np.where(both, 1.0 - s0, 0.0)
    s0[c0 & ~c1] = 1.0
    s1[c1 & ~c0] = 1.0
    frame = s0[:, :, None] * v0 + s1[:, :, None] * v1
    same = both & np.all(v0 == v1, axis=2)
    frame[same] = v0[same]
    hole = ~(c0 | c1)
    return FusionOutput(
        frame=ImageGrid(np.ascontiguousarray(frame)),
        hole_mask=ImageGrid.from_array(hole.astype(dt)),
        per_side_weights=(
            ImageGrid.from_array(s0.astype(dt, copy=False)),
            ImageGrid.from_array(s1.astype(dt, copy=False)),
        ),
    )


def _branch_importance(req, *, workers, backend):
    if req.mode not in ("linear", "softmax"):
        return None, None
    z0 = req.z0
    z1 = req.z1
    if z0 is None:
        z0 = brightness_constancy(req.i0, req.i1, req.flow01, req.params,
                                  workers=workers, backend=backend)
    if z1 is None:
        z1 = brightness_constancy(req.i1, req.i0, req.flow10, req.params,
                                  workers=workers, backend=backend)
    return z0, z1


def interpolate(req, *, workers=None, backend=None):
    """Synthesize one FusionOutput per requested time, in request order."""
    if not isinstance(req, InterpolationRequest):
        raise InvalidArgumentError(
            f"req must be an InterpolationRequest, got {type(req).__name__}"
        )
    z0, z1 = _branch_importance(req, workers=workers, backend=backend)
    outputs = []
    for t in req.times:
        out0 = splat(req.i0, scale_flow(req.flow01, t), req.mode, z0,
                     workers=workers, backend=backend)
        out1 = splat(req.i1, scale_flow(req.flow10, 1.0 - t), req.mode, z1,
                     workers=workers, backend=backend)
        outputs.append(fuse_pair(out0.warped, out0.weight,
                                 out1.warped, out1.weight, t))
    return outputs


def psnr(result, reference):
    """10 log10(1 / MSE) for [0, 1]-ranged frames, capped at 99 dB."""
    if not isinstance(result, ImageGrid) or not isinstance(reference, ImageGrid):
        raise InvalidArgumentError("psnr expects two ImageGrids")
    if result.data.shape != reference.data.shape:
        raise InvalidArgumentError(
            f"psnr shapes differ: {result.data.shape} vs {reference.data.shape}"
        )
    mse = float(np.mean((result.data.astype(np.float64)
                         - reference.data.astype(np.float64)) ** 2))
    if mse <= 0.0:
        return 99.0
    return min(99.0, 10.0 * math.log10(1.0 / mse))


@dataclass(frozen=True)
class SweepRecord:
    """Per-time summary emitted by temporal_sweep."""

    t: float
    psnr: Optional[float]
    hole_fraction: float
    mean_weight0: float
    mean_weight1: float


def sweep_times(steps):
    """The interior time stations {k/steps : k = 1..steps-1}."""
    if int(steps) != steps or steps < 2:
        raise InvalidArgumentError(f"steps must be an integer >= 2, got {steps!r}")
    return tuple(k / steps for k in range(1, int(steps)))


def temporal_sweep(req, reference=None, *, workers=None, backend=None):
    """Run interpolate over the request's times and summarize each frame.

    With a reference list (ground truth per time, same order) each record
    carries PSNR; without one, PSNR is None and the coverage statistics
    stand in.  Returns (records, outputs).
    """
    if reference is not None:
        reference = list(reference)
        if len(reference) != len(req.times):
            raise InvalidArgumentError(
                f"reference length {len(reference)} does not match times "
                f"length {len(req.times)}"
            )
    outputs = interpolate(req, workers=workers, backend=backend)
    records = []
    for i, (t, out) in enumerate(zip(req.times, outputs)):
        value = psnr(out.frame, reference[i]) if reference is not None else None
        s0, s1 = out.per_side_weights
        records.append(SweepRecord(
            t=float(t),
            psnr=value,
            hole_fraction=float(np.mean(out.hole_mask.data)),
            mean_weight0=float(np.mean(s0.data)),
            mean_weight1=float(np.mean(s1.data)),
        ))
    return records, outputs
