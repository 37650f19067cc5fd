"""Dense grid containers: images, flow fields and importance maps.

All containers wrap a C-contiguous, read-only numpy array in a fixed layout:

* ImageGrid      (height, width, channels) float32 or float64
* FlowField      (height, width, 2)        per-pixel displacement (dx, dy)
* ImportanceMap  (height, width)           scalar weight per pixel

The coordinate convention is shared by every operation in the package:
pixel centers sit at integer coordinates, (0, 0) is the top-left pixel,
+dx points right (increasing column) and +dy points down (increasing row).
A displacement stored at pixel q maps it to the continuous target q + F[q].

Values must be finite; NaN or infinity in a constructor argument raises
InvalidArgumentError immediately rather than propagating into kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

PRECISION_DTYPES = {"single": np.float32, "double": np.float64}
_DTYPE_NAMES = {np.dtype(np.float32): "single", np.dtype(np.float64): "double"}


def dtype_for(precision):
    """Map a precision name ("single" or "double") to a numpy dtype."""
    try:
        return PRECISION_DTYPES[precision]
    except KeyError:
        raise InvalidArgumentError(
            f"precision must be 'single' or 'double', got {precision!r}"
        ) from None


def _prepare(array, name, ndim, precision=None):
    """Validate and freeze a float array for storage in a grid container."""
    arr = np.asarray(array)
    if precision is not None:
        arr = arr.astype(dtype_for(precision), copy=False)
    if arr.dtype not in _DTYPE_NAMES:
        raise InvalidArgumentError(
            f"{name} must be float32 or float64, got dtype {arr.dtype}"
        )
    if arr.ndim != ndim:
        raise InvalidArgumentError(
            f"{name} must have {ndim} dimensions, got shape {arr.shape}"
        )
    if any(s < 1 for s in arr.shape):
        raise InvalidArgumentError(
            f"{name} dimensions must all be >= 1, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    # Containers own a read-only buffer.  Arrays that are already frozen and
    # self-owned (our own outputs) are adopted without another copy.
    if not (arr.flags.c_contiguous and not arr.flags.writeable and arr.base is None):
        arr = np.array(arr, order="C", copy=True)
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ImageGrid:
    """A (height, width, channels) raster of finite float samples."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "data", _prepare(self.data, "image", 3))

    @classmethod
    def from_array(cls, array, precision=None):
        """Build a grid, optionally casting to the named precision.

        A 2-d array is accepted as a single-channel image.
        """
        arr = np.asarray(array)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        return cls(_prepare(arr, "image", 3, precision))

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    @property
    def precision(self):
        return _DTYPE_NAMES[self.data.dtype]


@dataclass(frozen=True)
class FlowField:
    """A (height, width, 2) field of per-pixel displacements (dx, dy)."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _prepare(self.data, "flow", 3)
        if arr.shape[2] != 2:
            raise InvalidArgumentError(
                f"flow must have exactly 2 components, got shape {arr.shape}"
            )
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_array(cls, array, precision=None):
        arr = _prepare(array, "flow", 3, precision)
        if arr.shape[2] != 2:
            raise InvalidArgumentError(
                f"flow must have exactly 2 components, got shape {arr.shape}"
            )
        return cls(arr)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def precision(self):
        return _DTYPE_NAMES[self.data.dtype]

    @property
    def dx(self):
        """Horizontal displacement component, shape (height, width)."""
        return self.data[:, :, 0]

    @property
    def dy(self):
        """Vertical displacement component, shape (height, width)."""
        return self.data[:, :, 1]


@dataclass(frozen=True)
class ImportanceMap:
    """A (height, width) scalar weight per source pixel."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "data", _prepare(self.data, "importance", 2))

    @classmethod
    def from_array(cls, array, precision=None):
        return cls(_prepare(array, "importance", 2, precision))

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def precision(self):
        return _DTYPE_NAMES[self.data.dtype]


def make_grid(height, width, channels=1, fill=0.0, precision="double"):
    """Allocate a constant-valued ImageGrid.

    Preconditions: height, width, channels >= 1 and fill finite.
    """
    for name, value in (("height", height), ("width", width), ("channels", channels)):
        if int(value) != value or value < 1:
            raise InvalidArgumentError(f"{name} must be a positive integer, got {value!r}")
    if not np.isfinite(fill):
        raise InvalidArgumentError(f"fill must be finite, got {fill!r}")
    data = np.full((int(height), int(width), int(channels)), fill, dtype=dtype_for(precision))
    return ImageGrid(data)


def make_flow(height, width, dx=0.0, dy=0.0, precision="double"):
    """Allocate a constant displacement field."""
    for name, value in (("height", height), ("width", width)):
        if int(value) != value or value < 1:
            raise InvalidArgumentError(f"{name} must be a positive integer, got {value!r}")
    if not (np.isfinite(dx) and np.isfinite(dy)):
        raise InvalidArgumentError("dx and dy must be finite")
    data = np.empty((int(height), int(width), 2), dtype=dtype_for(precision))
    data[:, :, 0] = dx
    data[:, :, 1] = dy
    return FlowField(data)


def scale_flow(flow, factor):
    """Scale every displacement by a finite scalar, e.g. t * F for warping to time t."""
    if not isinstance(flow, FlowField):
        raise InvalidArgumentError(f"scale_flow expects a FlowField, got {type(flow).__name__}")
    if not np.isfinite(factor):
        raise InvalidArgumentError(f"scale factor must be finite, got {factor!r}")
    return FlowField(flow.data * flow.data.dtype.type(factor))
