"""Brightness-constancy importance scoring.

A pixel that keeps its color along its motion is a trustworthy contributor;
one that does not is likely occluded or mismatched.  The importance map is

    Z[q] = alpha * sum_c | i0[q, c] - backward_warp(i1, flow01)[q, c] |

an unaveraged per-pixel L1 norm over channels scaled by a learnable scalar
alpha (default -1, so larger mismatch means lower importance under softmax
splatting).  Any externally computed ImportanceMap can be used with the warp
operations instead; nothing downstream assumes this particular metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .grids import FlowField, ImageGrid, ImportanceMap
from .warp import backward_warp

DEFAULT_ALPHA = -1.0


@dataclass(frozen=True)
class MetricParams:
    """Learnable scalar scale of the brightness-constancy score."""

    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise InvalidArgumentError(f"alpha must be finite, got {self.alpha!r}")


def _check_metric_inputs(i0, i1, flow01, params):
    for label, grid in (("i0", i0), ("i1", i1)):
        if not isinstance(grid, ImageGrid):
            raise InvalidArgumentError(
                f"{label} must be an ImageGrid, got {type(grid).__name__}"
            )
    if i0.data.shape != i1.data.shape:
        raise InvalidArgumentError(
            f"i0 shape {i0.data.shape} does not match i1 shape {i1.data.shape}"
        )
    if not isinstance(flow01, FlowField):
        raise InvalidArgumentError(
            f"flow01 must be a FlowField, got {type(flow01).__name__}"
        )
    if (flow01.height, flow01.width) != (i0.height, i0.width):
        raise InvalidArgumentError(
            f"flow extent {(flow01.height, flow01.width)} does not match "
            f"image extent {(i0.height, i0.width)}"
        )
    if not isinstance(params, MetricParams):
        raise InvalidArgumentError(
            f"params must be MetricParams, got {type(params).__name__}"
        )


def _residual(i0, i1, flow01, workers, backend):
    warped = backward_warp(i1, flow01, workers=workers, backend=backend)
    return i0.data - warped.data


def brightness_constancy(i0, i1, flow01, params=MetricParams(), *,
                         workers=None, backend=None):
    """Score how well each i0 pixel keeps its color at its flow destination."""
    _check_metric_inputs(i0, i1, flow01, params)
    res = _residual(i0, i1, flow01, workers, backend)
    z = params.alpha * np.sum(np.abs(res), axis=2)
    return ImportanceMap(z)


def brightness_constancy_backward(i0, i1, flow01, params, upstream, *,
                                  workers=None, backend=None):
    """Gradients of the metric w.r.t. alpha and i0.

    Returns (d_alpha, d_i0).  The L1 subgradient at exactly zero residual is
    taken as 0.  Upstream must be an ImportanceMap co-shaped with the metric
    output.
    """
    _check_metric_inputs(i0, i1, flow01, params)
    if not isinstance(upstream, ImportanceMap):
        raise InvalidArgumentError(
            f"upstream must be an ImportanceMap, got {type(upstream).__name__}"
        )
    if (upstream.height, upstream.width) != (i0.height, i0.width):
        raise InvalidArgumentError(
            f"upstream extent {(upstream.height, upstream.width)} does not "
            f"match image extent {(i0.height, i0.width)}"
        )
    res = _residual(i0, i1, flow01, workers, backend)
    level = np.sum(np.abs(res), axis=2)
    d_alpha = float(np.sum(upstream.data * level))
    d_i0 = upstream.data[:, :, None] * (params.alpha * np.sign(res))
    return d_alpha, ImageGrid(np.ascontiguousarray(d_i0))
