"""Synthetic scene pairs with analytically exact flows and ground truth.

Each scene yields (i0, i1, flow01, flow10) plus ground-truth frames at the
times whose displacement is an integer number of pixels; those are the only
times where the true intermediate frame lands exactly on the pixel grid.

Kinds:
  rigid-translate  the whole frame translates `shift` pixels along +x
                   (i1 is i0 rolled; content leaving the right edge has no
                   in-frame correspondence, matching the wrapped pixels).
  two-layer        a textured static background plus a solid foreground
                   rectangle translating `shift` pixels along +x; splatting
                   i0 forward makes the moving rectangle collide with the
                   background it advances onto.
  rotating         a disk rotates about the frame center while the
                   surroundings stay fixed; displacements are non-integer
                   almost everywhere, so no truth frames are emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .grids import FlowField, ImageGrid, dtype_for

SCENE_KINDS = ("rigid-translate", "two-layer", "rotating")

_FG_COLOR = (0.9, 0.2, 0.15)


def _texture(ys, xs, height, width):
    """Smooth 3-channel texture in (0, 1), evaluable at arbitrary coordinates."""
    u = xs * (2.0 * np.pi / width)
    v = ys * (2.0 * np.pi / height)
    c0 = 0.5 + 0.24 * np.sin(3.0 * u + 0.7) + 0.2 * np.cos(2.0 * v)
    c1 = 0.5 + 0.22 * np.sin(2.0 * u - 1.1) * np.cos(3.0 * v + 0.4) + 0.15 * np.sin(5.0 * v)
    c2 = 0.5 + 0.2 * np.cos(4.0 * u + 2.0 * v) + 0.18 * np.sin(1.0 * u - 0.3)
    return np.clip(np.stack([c0, c1, c2], axis=-1), 0.02, 0.98)


def _radial_texture(r):
    """Rotation-invariant 3-channel texture in (0, 1)."""
    c0 = 0.5 + 0.3 * np.sin(0.35 * r)
    c1 = 0.5 + 0.28 * np.cos(0.22 * r + 0.8)
    c2 = 0.5 + 0.25 * np.sin(0.5 * r - 1.2)
    return np.clip(np.stack([c0, c1, c2], axis=-1), 0.02, 0.98)


@dataclass(frozen=True)
class SceneBundle:
    """A frame pair, its exact flows, and integer-displacement truth frames.

    `truth` maps an integer displacement j (0 < j < shift) to the exact
    frame at time t = j / shift; `truth_time` converts the key to its time.
    For two-layer scenes `fg_rect` records the foreground placement in i0
    as (x0, y0, height, width).
    """

    kind: str
    shift: float
    i0: ImageGrid
    i1: ImageGrid
    flow01: FlowField
    flow10: FlowField
    truth: dict = field(default_factory=dict)
    fg_rect: tuple = None

    def truth_time(self, j):
        return j / self.shift

    def collision_mask(self, j):
        """Pixels where the displaced foreground overlaps background sources.

        At displacement j the rectangle occupies columns [x0+j, x0+j+w); the
        part of that span outside the rectangle's original columns is also
        the target of zero-flow background pixels, so forward splatting i0
        lands two sources there.
        """
        if self.fg_rect is None:
            raise InvalidArgumentError("collision_mask applies to two-layer scenes only")
        x0, y0, fg_h, fg_w = self.fg_rect
        mask = np.zeros((self.i0.height, self.i0.width), dtype=bool)
        lo = max(x0 + j, x0 + fg_w)
        hi = x0 + j + fg_w
        mask[y0 : y0 + fg_h, lo:hi] = True
        return mask


def _truth_steps(shift):
    return range(1, int(shift))


def _rigid_translate(size, shift, dt):
    height = width = size
    ys, xs = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    base = _texture(ys, xs, height, width).astype(dt)
    i0 = ImageGrid.from_array(base)
    i1 = ImageGrid.from_array(np.roll(base, int(shift), axis=1))
    zero = np.zeros((height, width), dtype=dt)
    flow01 = FlowField.from_array(np.stack([zero + dt(shift), zero], axis=-1))
    flow10 = FlowField.from_array(np.stack([zero - dt(shift), zero], axis=-1))
    truth = {
        j: ImageGrid.from_array(np.roll(base, j, axis=1)) for j in _truth_steps(shift)
    }
    return SceneBundle("rigid-translate", float(shift), i0, i1, flow01, flow10, truth)


def _two_layer_frame(base, x0, y0, fg_h, fg_w):
    frame = base.copy()
    frame[y0 : y0 + fg_h, x0 : x0 + fg_w] = np.array(_FG_COLOR, dtype=base.dtype)
    return frame


def _two_layer(size, shift, dt):
    height = width = size
    fg_h = fg_w = max(2, size // 4)
    x0 = max(1, size // 5)
    y0 = (height - fg_h) // 2
    if x0 + fg_w + int(shift) > width:
        raise InvalidArgumentError(
            f"foreground leaves the frame: start {x0} + width {fg_w} + shift "
            f"{int(shift)} exceeds {width} columns"
        )
    ys, xs = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    base = _texture(ys, xs, height, width).astype(dt)

    i0 = ImageGrid.from_array(_two_layer_frame(base, x0, y0, fg_h, fg_w))
    i1 = ImageGrid.from_array(_two_layer_frame(base, x0 + int(shift), y0, fg_h, fg_w))

    def rect_flow(left, dx):
        f = np.zeros((height, width, 2), dtype=dt)
        f[y0 : y0 + fg_h, left : left + fg_w, 0] = dx
        return FlowField.from_array(f)

    flow01 = rect_flow(x0, dt(shift))
    flow10 = rect_flow(x0 + int(shift), -dt(shift))
    truth = {
        j: ImageGrid.from_array(_two_layer_frame(base, x0 + j, y0, fg_h, fg_w))
        for j in _truth_steps(shift)
    }
    return SceneBundle(
        "two-layer", float(shift), i0, i1, flow01, flow10, truth,
        fg_rect=(x0, y0, fg_h, fg_w),
    )


def _rotating(size, shift, dt):
    height = width = size
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    radius = 0.4 * min(height, width)
    theta = float(shift) / radius

    ys, xs = np.meshgrid(np.arange(height, dtype=np.float64),
                         np.arange(width, dtype=np.float64), indexing="ij")
    rel_x, rel_y = xs - cx, ys - cy
    r = np.hypot(rel_x, rel_y)
    inside = r <= radius

    def frame(angle):
        # Sample the disk texture in coordinates rotated back by `angle`.
        ca, sa = np.cos(angle), np.sin(angle)
        sx = ca * rel_x + sa * rel_y
        sy = -sa * rel_x + ca * rel_y
        disk = _texture(sy + cy, sx + cx, height, width)
        ring = _radial_texture(r)
        return np.where(inside[:, :, None], disk, ring).astype(dt)

    def flow(angle):
        ca, sa = np.cos(angle), np.sin(angle)
        dx = (ca * rel_x - sa * rel_y) - rel_x
        dy = (sa * rel_x + ca * rel_y) - rel_y
        f = np.stack([dx, dy], axis=-1)
        f[~inside] = 0.0
        return FlowField.from_array(f.astype(dt))

    return SceneBundle(
        "rotating", float(shift),
        ImageGrid.from_array(frame(0.0)), ImageGrid.from_array(frame(theta)),
        flow(theta), flow(-theta), {},
    )


def make_scene(kind, size=64, shift=8, precision="double"):
    """Build a synthetic scene pair with exact flows.

    For rigid-translate and two-layer, `shift` must be a non-negative
    integer so the emitted truth frames land on the pixel grid; a shift of 0
    yields a static pair (i0 == i1) with no separate truth frames.
    """
    if kind not in SCENE_KINDS:
        raise InvalidArgumentError(f"unknown scene kind {kind!r}; expected one of {SCENE_KINDS}")
    if not isinstance(size, (int, np.integer)) or size < 8:
        raise InvalidArgumentError(f"size must be an integer >= 8, got {size!r}")
    dt = dtype_for(precision)
    if kind == "rotating":
        if not np.isfinite(shift) or shift < 0:
            raise InvalidArgumentError(f"shift must be a finite value >= 0, got {shift!r}")
        return _rotating(size, shift, dt)
    if shift != int(shift) or shift < 0:
        raise InvalidArgumentError(
            f"{kind} needs a non-negative integer shift for exact truth frames, got {shift!r}"
        )
    if kind == "rigid-translate":
        if int(shift) >= size:
            raise InvalidArgumentError(f"shift {shift} must be smaller than size {size}")
        return _rigid_translate(size, int(shift), dt)
    return _two_layer(size, int(shift), dt)
