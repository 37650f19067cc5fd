"""Independent verification machinery for the warp operations.

Three tools, deliberately slow and literal:

* gather_oracle: evaluates the splat definition per output pixel by looping
  all (target, source) pairs, O(N^2).  The fast scatter implementation is
  accepted only when it matches this.
* zbuffer_oracle: hard winner-take-all selection of the highest-importance
  contributor per target pixel, the limit that softmax splatting approaches
  as the importance scale grows.
* finite_difference_check: central-difference validation of any operation's
  analytic gradients against a random upstream contraction.

Everything here is single-threaded numpy; nothing is shared with the kernel
backends being checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AmbiguousInputError, InternalError, InvalidArgumentError
from .grids import FlowField, ImageGrid, ImportanceMap
from .metric import MetricParams, brightness_constancy, brightness_constancy_backward
from .warp import (
    WarpOutput,
    _check_op_inputs,
    coverage_epsilon,
    splat,
    splat_backward,
)

_ORACLE_LIMIT = 64

DEFAULT_OP_NAMES = (
    "splat_summation",
    "splat_average",
    "splat_linear",
    "splat_softmax",
    "brightness_constancy",
)


def _pair_weights(source, flow):
    """Dense (targets, sources) bilinear weight matrix from the definition."""
    height, width = source.height, source.width
    if height > _ORACLE_LIMIT or width > _ORACLE_LIMIT:
        raise InvalidArgumentError(
            f"oracle refuses grids above {_ORACLE_LIMIT}x{_ORACLE_LIMIT}, "
            f"got {height}x{width}"
        )
    dt = np.result_type(source.data, flow.data)
    xs = np.arange(width, dtype=dt)
    ys = np.arange(height, dtype=dt)
    tx = (xs[None, :] + flow.data[:, :, 0].astype(dt)).ravel()
    ty = (ys[:, None] + flow.data[:, :, 1].astype(dt)).ravel()
    px = np.tile(xs, height)
    py = np.repeat(ys, width)
    bx = np.maximum(0.0, 1.0 - np.abs(px[:, None] - tx[None, :]))
    by = np.maximum(0.0, 1.0 - np.abs(py[:, None] - ty[None, :]))
    return bx * by, dt


def gather_oracle(source, flow, mode, importance=None):
    """Literal per-output-pixel evaluation of the splat sum.

    Matches the semantics of warp.splat exactly (same hole threshold, same
    stabilization of the softmax weights) but shares no code with the
    scatter kernels.
    """
    _check_op_inputs(source, flow, mode, importance)
    b, dt = _pair_weights(source, flow)
    height, width, channels = source.data.shape
    src2 = source.data.astype(dt).reshape(-1, channels)
    if mode == "summation":
        warped = b @ src2
        weight = b.sum(axis=1)
    else:
        if mode == "average":
            w = np.ones(height * width, dtype=dt)
        elif mode == "linear":
            w = importance.data.astype(dt).ravel()
        else:
            z = importance.data.astype(dt).ravel()
            w = np.exp(z - z.max())
        den = b @ w
        num = b @ (w[:, None] * src2)
        covered = np.abs(den) > coverage_epsilon(dt)
        warped = np.where(covered[:, None], num / np.where(covered, den, 1.0)[:, None], 0.0)
        weight = np.where(covered, den, 0.0)
    return WarpOutput(
        warped=ImageGrid(np.ascontiguousarray(warped.reshape(height, width, channels))),
        weight=ImportanceMap(np.ascontiguousarray(weight.reshape(height, width))),
        mode=mode,
    )


def zbuffer_oracle(source, flow, importance):
    """Hard selection: each covered target pixel takes the value of the
    single highest-importance source whose footprint covers it.

    An importance tie between two covering sources at a contested pixel has
    no unique winner and raises AmbiguousInputError.
    """
    _check_op_inputs(source, flow, "softmax", importance)
    b, dt = _pair_weights(source, flow)
    height, width, channels = source.data.shape
    src2 = source.data.astype(dt).reshape(-1, channels)
    z = importance.data.astype(dt).ravel()
    cov = b > 0.0
    counts = cov.sum(axis=1)
    zmask = np.where(cov, z[None, :], -np.inf)
    best = zmask.max(axis=1, initial=-np.inf)
    nwin = np.count_nonzero(zmask == best[:, None], axis=1)
    contested = (counts >= 2) & (nwin >= 2)
    if np.any(contested):
        p = int(np.flatnonzero(contested)[0])
        raise AmbiguousInputError(
            f"importance tie among contributors at target pixel "
            f"(row {p // width}, col {p % width})"
        )
    qstar = np.argmax(zmask, axis=1)
    covered = counts >= 1
    warped = np.where(covered[:, None], src2[qstar], 0.0)
    weight = np.where(covered, b[np.arange(b.shape[0]), qstar], 0.0)
    return WarpOutput(
        warped=ImageGrid(np.ascontiguousarray(warped.reshape(height, width, channels))),
        weight=ImportanceMap(np.ascontiguousarray(weight.reshape(height, width))),
        mode="softmax",
    )


@dataclass(frozen=True)
class GradCheckReport:
    """Outcome of finite-difference validation for one operation."""

    op_name: str
    max_rel_error: float
    worst_coordinate: tuple
    num_probes: int
    passed: bool


@dataclass(frozen=True)
class OpHandle:
    """A differentiable operation packaged for the checker.

    forward(inputs) returns the output array; backward(inputs, upstream)
    returns {input name: gradient array} for every differentiable input.
    Inputs live in a plain dict of float64 arrays; names absent from
    `differentiable` are treated as constants.
    """

    name: str
    forward: Callable[[dict], np.ndarray]
    backward: Callable[[dict, np.ndarray], dict]
    differentiable: tuple


def _coordinate_label(shape, flat_index):
    idx = np.unravel_index(flat_index, shape) if shape else ()
    if len(idx) >= 3:
        return (idx[0], idx[1]), idx[2]
    if len(idx) == 2:
        return (idx[0], idx[1]), None
    return None, None


def finite_difference_check(op, inputs, step=1e-6, tolerance=1e-4, *,
                            upstream=None, rng=None):
    """Probe every scalar coordinate of every differentiable input.

    The loss is sum(forward(x) * upstream); its numeric derivative
    (f(x+step) - f(x-step)) / (2 step) per coordinate is compared with the
    analytic backward, as relative error with denominator
    max(|analytic|, |numeric|, 1e-8).
    """
    if not isinstance(op, OpHandle):
        raise InvalidArgumentError(f"op must be an OpHandle, got {type(op).__name__}")
    if not (1e-7 <= step <= 1e-5):
        raise InvalidArgumentError(f"step must lie in [1e-7, 1e-5], got {step!r}")
    for name_, arr in inputs.items():
        if np.asarray(arr).dtype != np.float64:
            raise InvalidArgumentError(
                f"gradcheck requires double precision inputs; {name_!r} is "
                f"{np.asarray(arr).dtype}"
            )
    base = op.forward(inputs)
    if upstream is None:
        upstream = (rng or np.random.default_rng(0)).standard_normal(base.shape)
    grads = op.backward(inputs, upstream)
    max_rel = 0.0
    worst = (None, None, "")
    probes = 0
    for name_ in op.differentiable:
        x = inputs[name_]
        analytic = np.asarray(grads[name_], dtype=np.float64)
        flat = np.asarray(x, dtype=np.float64).ravel()
        for i in range(flat.size):
            probes += 1
            numeric_parts = []
            for sgn in (+1.0, -1.0):
                shifted = flat.copy()
                shifted[i] += sgn * step
                probe_inputs = dict(inputs)
                probe_inputs[name_] = shifted.reshape(np.shape(x))
                value = op.forward(probe_inputs)
                if not np.all(np.isfinite(value)):
                    pixel, channel = _coordinate_label(np.shape(x), i)
                    raise InternalError(
                        f"non-finite forward value while probing {op.name} at "
                        f"input {name_!r}, pixel {pixel}, channel {channel}"
                    )
                numeric_parts.append(float(np.sum(value * upstream)))
            numeric = (numeric_parts[0] - numeric_parts[1]) / (2.0 * step)
            a = float(analytic.ravel()[i])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            if rel > max_rel:
                pixel, channel = _coordinate_label(np.shape(x), i)
                max_rel = rel
                worst = (pixel, channel, name_)
    return GradCheckReport(
        op_name=op.name,
        max_rel_error=max_rel,
        worst_coordinate=worst,
        num_probes=probes,
        passed=max_rel < tolerance,
    )


def make_splat_handle(mode, *, workers=None, backend=None):
    """OpHandle for one splat mode operating on raw arrays."""
    needs_z = mode in ("linear", "softmax")

    def forward(inputs):
        imp = ImportanceMap(inputs["importance"]) if needs_z else None
        out = splat(
            ImageGrid(inputs["source"]), FlowField(inputs["flow"]), mode, imp,
            workers=workers, backend=backend,
        )
        return out.warped.data

    def backward(inputs, upstream):
        imp = ImportanceMap(inputs["importance"]) if needs_z else None
        bundle = splat_backward(
            ImageGrid(inputs["source"]), FlowField(inputs["flow"]), mode,
            ImageGrid(np.ascontiguousarray(upstream)), imp,
            workers=workers, backend=backend,
        )
        grads = {"source": bundle.d_source.data, "flow": bundle.d_flow.data}
        if needs_z:
            grads["importance"] = bundle.d_importance.data
        return grads

    names = ("source", "flow", "importance") if needs_z else ("source", "flow")
    return OpHandle(name=f"splat_{mode}", forward=forward, backward=backward,
                    differentiable=names)


def make_brightness_handle(*, workers=None, backend=None):
    """OpHandle for the brightness-constancy metric (alpha and i0 paths)."""

    def forward(inputs):
        out = brightness_constancy(
            ImageGrid(inputs["i0"]), ImageGrid(inputs["i1"]),
            FlowField(inputs["flow01"]), MetricParams(float(inputs["alpha"])),
            workers=workers, backend=backend,
        )
        return out.data

    def backward(inputs, upstream):
        d_alpha, d_i0 = brightness_constancy_backward(
            ImageGrid(inputs["i0"]), ImageGrid(inputs["i1"]),
            FlowField(inputs["flow01"]), MetricParams(float(inputs["alpha"])),
            ImportanceMap(np.ascontiguousarray(upstream)),
            workers=workers, backend=backend,
        )
        return {"i0": d_i0.data, "alpha": np.float64(d_alpha)}

    return OpHandle(name="brightness_constancy", forward=forward,
                    backward=backward, differentiable=("i0", "alpha"))


def op_handle(name, *, workers=None, backend=None):
    if name == "brightness_constancy":
        return make_brightness_handle(workers=workers, backend=backend)
    if name.startswith("splat_"):
        return make_splat_handle(name[len("splat_"):], workers=workers, backend=backend)
    raise InvalidArgumentError(f"unknown gradcheck op {name!r}")


def smooth_flow(rng, height, width, sigma=3.0, margin=1e-3):
    """Random flow with per-component target fractions kept in
    [margin, 1 - margin], so every probe stays inside one smooth cell of the
    bilinear kernel."""
    flow = rng.normal(0.0, sigma, (height, width, 2))
    base = np.stack(
        np.meshgrid(np.arange(width), np.arange(height)), axis=-1
    ).astype(np.float64)
    for _ in range(64):
        target = base + flow
        frac = target - np.floor(target)
        bad = (frac < margin) | (frac > 1.0 - margin)
        if not bad.any():
            return flow
        flow[bad] = rng.normal(0.0, sigma, int(bad.sum()))
    # unreachable in practice; shove stragglers to mid-cell
    target = base + flow
    frac = target - np.floor(target)
    bad = (frac < margin) | (frac > 1.0 - margin)
    flow[bad] += 0.5
    return flow


def sample_instance(op_name, rng, height=4, width=4, channels=2):
    """Standard random inputs used by run_gradcheck for the given op."""
    if op_name == "brightness_constancy":
        return {
            "i0": rng.uniform(0.55, 0.95, (height, width, channels)),
            "i1": rng.uniform(0.05, 0.45, (height, width, channels)),
            "flow01": rng.normal(0.0, 3.0, (height, width, 2)),
            "alpha": np.float64(rng.uniform(-2.0, -0.5)),
        }
    inputs = {
        "source": rng.uniform(0.0, 1.0, (height, width, channels)),
        "flow": smooth_flow(rng, height, width),
    }
    if op_name == "splat_linear":
        inputs["importance"] = rng.uniform(0.5, 2.0, (height, width))
    elif op_name == "splat_softmax":
        z = rng.uniform(-1.0, 1.0, (height, width))
        inputs["importance"] = z
        # Probing the largest z moves the max-subtraction stabilizer, which
        # re-rounds every exponential; wherever the true gradient of that
        # coordinate is exactly zero the probe sees only this noise,
        # amplified by 1/(2 step) past the 1e-8 error floor.  Keep the
        # argmax source fully on-grid, then aim a second source at the same
        # footprint: the collision guarantees the argmax probe carries real
        # signal that dwarfs the stabilizer noise.
        qy, qx = np.unravel_index(int(np.argmax(z)), z.shape)
        flow = inputs["flow"]
        for _ in range(64):
            tx = qx + flow[qy, qx, 0]
            ty = qy + flow[qy, qx, 1]
            frx = tx - np.floor(tx)
            fry = ty - np.floor(ty)
            if (0.25 <= tx <= width - 1.25 and 0.25 <= ty <= height - 1.25
                    and 1e-3 <= frx <= 1.0 - 1e-3 and 1e-3 <= fry <= 1.0 - 1e-3):
                break
            flow[qy, qx] = rng.normal(0.0, 1.0, 2)
        py, px = (qy + 1) % height, qx
        mid_x = np.floor(qx + flow[qy, qx, 0]) + 0.5
        mid_y = np.floor(qy + flow[qy, qx, 1]) + 0.5
        flow[py, px, 0] = mid_x - px
        flow[py, px, 1] = mid_y - py
    return inputs


def run_gradcheck(op_names=None, *, instances=100, seed=0, step=1e-6,
                  tolerance=1e-4, workers=None, backend=None):
    """Aggregate finite-difference checks over seeded random instances.

    Returns one GradCheckReport per op (max error across its instances).
    Seeding scheme: instance k of op index j uses default_rng([seed, j, k]).
    """
    if op_names is None:
        op_names = DEFAULT_OP_NAMES
    reports = []
    for j, name_ in enumerate(op_names):
        handle = op_handle(name_, workers=workers, backend=backend)
        max_rel = 0.0
        worst = (None, None, "")
        probes = 0
        for k in range(instances):
            rng = np.random.default_rng([seed, j, k])
            inputs = sample_instance(name_, rng)
            report = finite_difference_check(
                handle, inputs, step=step, tolerance=tolerance, rng=rng
            )
            probes += report.num_probes
            if report.max_rel_error > max_rel:
                max_rel = report.max_rel_error
                worst = report.worst_coordinate
        reports.append(GradCheckReport(
            op_name=name_,
            max_rel_error=max_rel,
            worst_coordinate=worst,
            num_probes=probes,
            passed=max_rel < tolerance,
        ))
    return reports
