"""File interchange: Middlebury .flo flows, PFM float maps, PNG images.

.flo layout: 4-byte little-endian float magic 202021.25, int32 width, int32
height, then row-major interleaved (dx, dy) float32 pairs.  PFM: `Pf` (one
channel) or `PF` (three), ASCII dims line, scale line whose sign encodes
endianness (negative = little), rows stored bottom-to-top.  Both formats are
32-bit; round-trips are bit-exact at that precision.  Images are 8- or
16-bit lossless rasters scaled to [0, 1] on read; writes clamp to [0, 1]
and quantize round-half-away-from-zero.
"""

from __future__ import annotations

import os
import re
import struct

import cv2
import numpy as np

from .errors import FormatError, InvalidArgumentError
from .grids import FlowField, ImageGrid, ImportanceMap, dtype_for

FLO_MAGIC = 202021.25
_MAX_PIXELS = 100_000_000
_PFM_HEADER = re.compile(rb"^(P[Ff])\s+(\d+)\s+(\d+)\s+([-+]?[0-9.eE+-]+)\s")


def write_flo(flow, path):
    """Serialize a FlowField; double-precision fields are stored as float32."""
    if not isinstance(flow, FlowField):
        raise InvalidArgumentError(f"write_flo expects a FlowField, got {type(flow).__name__}")
    with open(path, "wb") as f:
        f.write(struct.pack("<f", FLO_MAGIC))
        f.write(struct.pack("<ii", flow.width, flow.height))
        f.write(flow.data.astype("<f4").tobytes())


def read_flo(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 12:
        raise FormatError(
            f"truncated flow header in {path}: expected at least 12 bytes, found {len(raw)}"
        )
    magic_bytes = raw[:4]
    magic = struct.unpack("<f", magic_bytes)[0]
    if magic != FLO_MAGIC:
        raise FormatError(
            f"bad flow magic in {path}: expected {FLO_MAGIC}, found bytes "
            f"0x{magic_bytes.hex()} ({magic!r})"
        )
    width, height = struct.unpack("<ii", raw[4:12])
    if width < 1 or height < 1 or width * height > _MAX_PIXELS:
        raise FormatError(f"implausible flow dimensions {width}x{height} in {path}")
    expected = 12 + width * height * 8
    if len(raw) != expected:
        raise FormatError(
            f"truncated flow payload in {path}: expected {expected} bytes, found {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(height, width, 2)
    try:
        return FlowField.from_array(data.astype(np.float32))
    except InvalidArgumentError as exc:
        raise FormatError(f"flow file {path} holds invalid values: {exc}") from exc


def write_pfm(array, path):
    """Write a (H, W) or (H, W, 3) float map as little-endian PFM."""
    if isinstance(array, (ImportanceMap, ImageGrid)):
        array = array.data
    arr = np.asarray(array)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise InvalidArgumentError(
            f"PFM stores 1- or 3-channel maps, got shape {arr.shape}"
        )
    height, width = arr.shape[:2]
    with open(path, "wb") as f:
        f.write(magic + b"\n")
        f.write(f"{width} {height}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(arr).astype("<f4").tobytes())


def read_pfm(path):
    """Read a PFM file into a float32 array, (H, W) for Pf or (H, W, 3) for PF."""
    with open(path, "rb") as f:
        raw = f.read()
    m = _PFM_HEADER.match(raw)
    if not m:
        raise FormatError(f"malformed PFM header in {path}")
    magic, width, height = m.group(1), int(m.group(2)), int(m.group(3))
    try:
        scale = float(m.group(4))
    except ValueError as exc:
        raise FormatError(f"malformed PFM scale in {path}: {m.group(4)!r}") from exc
    if scale == 0.0 or not np.isfinite(scale):
        raise FormatError(f"invalid PFM scale {scale!r} in {path}")
    if width < 1 or height < 1 or width * height > _MAX_PIXELS:
        raise FormatError(f"implausible PFM dimensions {width}x{height} in {path}")
    channels = 3 if magic == b"PF" else 1
    count = width * height * channels
    payload = raw[m.end():]
    if len(payload) != count * 4:
        raise FormatError(
            f"truncated PFM payload in {path}: expected {count * 4} bytes, "
            f"found {len(payload)}"
        )
    endian = "<" if scale < 0.0 else ">"
    arr = np.frombuffer(payload, dtype=endian + "f4")
    shape = (height, width, 3) if channels == 3 else (height, width)
    return np.flipud(arr.reshape(shape)).astype(np.float32)


def read_importance(path):
    arr = read_pfm(path)
    if arr.ndim != 2:
        raise FormatError(
            f"importance maps are single-channel Pf; {path} holds {arr.shape[2]} channels"
        )
    try:
        return ImportanceMap.from_array(arr)
    except InvalidArgumentError as exc:
        raise FormatError(f"importance file {path} holds invalid values: {exc}") from exc


def read_image(path, precision="single"):
    """Load an 8- or 16-bit raster as an ImageGrid scaled to [0, 1]."""
    if not os.path.exists(str(path)):
        raise FormatError(f"could not read image {path}: file does not exist")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise FormatError(f"could not read image {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise FormatError(
            f"unsupported image bit depth {raw.dtype} in {path}; expected 8- or 16-bit"
        )
    if raw.ndim == 2:
        arr = raw[:, :, None]
    elif raw.ndim == 3 and raw.shape[2] == 3:
        arr = raw[:, :, ::-1]  # BGR storage order
    else:
        raise FormatError(
            f"unsupported image layout with shape {raw.shape} in {path}; "
            "expected grayscale or 3-channel color"
        )
    dt = dtype_for(precision)
    return ImageGrid.from_array(arr.astype(dt) / dt(scale))


def write_image(grid, path, bits=8):
    """Write an ImageGrid as an 8- or 16-bit raster (grayscale or color)."""
    if not isinstance(grid, ImageGrid):
        raise InvalidArgumentError(f"write_image expects an ImageGrid, got {type(grid).__name__}")
    if bits == 8:
        scale, store = 255.0, np.uint8
    elif bits == 16:
        scale, store = 65535.0, np.uint16
    else:
        raise InvalidArgumentError(f"bits must be 8 or 16, got {bits!r}")
    q = np.floor(np.clip(grid.data, 0.0, 1.0) * scale + 0.5).astype(store)
    if grid.channels == 1:
        img = q[:, :, 0]
    elif grid.channels == 3:
        img = q[:, :, ::-1]
    else:
        raise InvalidArgumentError(
            f"only 1- or 3-channel grids can be written, got {grid.channels}"
        )
    if not cv2.imwrite(str(path), img):
        raise FormatError(f"could not write image {path}")
