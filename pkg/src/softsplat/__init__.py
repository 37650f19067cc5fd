"""Differentiable forward warping (splatting) for images and feature grids.

Core surface:

* grids: ImageGrid, FlowField, ImportanceMap containers plus constructors
* warp: splat / splat_backward / backward_warp in four collision modes
* metric: brightness-constancy importance scoring
* oracle: slow reference implementations and finite-difference checking
* interp: two-frame fusion pipeline and temporal sweeps
* io: .flo, PFM and PNG readers/writers
* scenes: synthetic scenes with exact flows and ground truth
"""

from .errors import (
    AmbiguousInputError,
    FormatError,
    InternalError,
    InvalidArgumentError,
    SplatError,
)
from .grids import (
    FlowField,
    ImageGrid,
    ImportanceMap,
    make_flow,
    make_grid,
    scale_flow,
)
from .warp import (
    MODES,
    GradientBundle,
    WarpOutput,
    backward_warp,
    coverage_epsilon,
    splat,
    splat_backward,
)
from .metric import (
    DEFAULT_ALPHA,
    MetricParams,
    brightness_constancy,
    brightness_constancy_backward,
)
from .oracle import (
    GradCheckReport,
    finite_difference_check,
    gather_oracle,
    op_handle,
    run_gradcheck,
    zbuffer_oracle,
)
from .interp import (
    FusionOutput,
    InterpolationRequest,
    SweepRecord,
    fuse_pair,
    interpolate,
    psnr,
    sweep_times,
    temporal_sweep,
)
from .io import (
    read_flo,
    read_image,
    read_importance,
    read_pfm,
    write_flo,
    write_image,
    write_pfm,
)
from .scenes import SCENE_KINDS, SceneBundle, make_scene

__version__ = "0.1.0"

__all__ = [
    "AmbiguousInputError",
    "DEFAULT_ALPHA",
    "FormatError",
    "FlowField",
    "FusionOutput",
    "GradCheckReport",
    "GradientBundle",
    "ImageGrid",
    "ImportanceMap",
    "InternalError",
    "InterpolationRequest",
    "InvalidArgumentError",
    "MODES",
    "MetricParams",
    "SCENE_KINDS",
    "SceneBundle",
    "SplatError",
    "SweepRecord",
    "WarpOutput",
    "backward_warp",
    "brightness_constancy",
    "brightness_constancy_backward",
    "coverage_epsilon",
    "finite_difference_check",
    "fuse_pair",
    "gather_oracle",
    "interpolate",
    "make_flow",
    "make_grid",
    "make_scene",
    "op_handle",
    "psnr",
    "read_flo",
    "read_image",
    "read_importance",
    "read_pfm",
    "run_gradcheck",
    "scale_flow",
    "splat",
    "splat_backward",
    "sweep_times",
    "temporal_sweep",
    "write_flo",
    "write_image",
    "write_pfm",
    "zbuffer_oracle",
    "__version__",
]
