import struct

import numpy as np
import pytest

from softsplat import (
    FlowField,
    FormatError,
    ImageGrid,
    InvalidArgumentError,
    read_flo,
    read_image,
    read_importance,
    read_pfm,
    write_flo,
    write_image,
    write_pfm,
)


def test_flo_roundtrip_bit_exact(tmp_path, rng):
    flow = FlowField.from_array(rng.normal(0, 5, (7, 9, 2)).astype(np.float32))
    path = tmp_path / "f.flo"
    write_flo(flow, path)
    back = read_flo(path)
    assert back.data.dtype == np.float32
    assert np.array_equal(back.data, flow.data)


def test_flo_golden_byte_layout(tmp_path):
    # 1x1 field, dx=1.5, dy=-2.0: magic, width, height, then the two floats.
    flow = FlowField.from_array(np.array([[[1.5, -2.0]]], dtype=np.float32))
    path = tmp_path / "one.flo"
    write_flo(flow, path)
    raw = path.read_bytes()
    assert len(raw) == 20
    expected = (struct.pack("<f", 202021.25) + struct.pack("<ii", 1, 1)
                + struct.pack("<ff", 1.5, -2.0))
    assert raw == expected


def test_flo_bad_magic_names_bytes(tmp_path):
    path = tmp_path / "bad.flo"
    path.write_bytes(struct.pack("<f", 0.0) + struct.pack("<ii", 1, 1) + b"\x00" * 8)
    with pytest.raises(FormatError, match="magic") as err:
        read_flo(path)
    assert "0x00000000" in str(err.value)


def test_flo_truncation_reports_counts(tmp_path):
    flow = FlowField.from_array(np.zeros((4, 4, 2), dtype=np.float32))
    path = tmp_path / "t.flo"
    write_flo(flow, path)
    with open(path, "r+b") as f:
        f.truncate(50)
    with pytest.raises(FormatError, match="expected 140 bytes, found 50"):
        read_flo(path)
    with open(path, "r+b") as f:
        f.truncate(8)
    with pytest.raises(FormatError, match="at least 12"):
        read_flo(path)


def test_flo_rejects_non_finite_payload(tmp_path):
    path = tmp_path / "nan.flo"
    payload = struct.pack("<ff", np.nan, 0.0)
    path.write_bytes(struct.pack("<f", 202021.25) + struct.pack("<ii", 1, 1) + payload)
    with pytest.raises(FormatError, match="invalid values"):
        read_flo(path)


def test_pfm_roundtrip_bit_exact(tmp_path, rng):
    arr = rng.normal(0, 100, (6, 5)).astype(np.float32)
    path = tmp_path / "z.pfm"
    write_pfm(arr, path)
    assert np.array_equal(read_pfm(path), arr)
    imp = read_importance(path)
    assert np.array_equal(imp.data, arr)


def test_pfm_color_roundtrip(tmp_path, rng):
    arr = rng.random((4, 3, 3)).astype(np.float32)
    path = tmp_path / "c.pfm"
    write_pfm(arr, path)
    back = read_pfm(path)
    assert back.shape == (4, 3, 3)
    assert np.array_equal(back, arr)
    with pytest.raises(FormatError, match="single-channel"):
        read_importance(path)


def test_pfm_big_endian_scale_honored(tmp_path):
    arr = np.array([[1.0, -2.5], [0.25, 4.0]], dtype=np.float32)
    path = tmp_path / "be.pfm"
    header = f"Pf\n{arr.shape[1]} {arr.shape[0]}\n1.0\n".encode("ascii")
    path.write_bytes(header + np.flipud(arr).astype(">f4").tobytes())
    assert np.array_equal(read_pfm(path), arr)


def test_pfm_malformed_and_truncated(tmp_path):
    path = tmp_path / "bad.pfm"
    path.write_bytes(b"P5\n2 2\n255\n\x00\x00\x00\x00")
    with pytest.raises(FormatError, match="header"):
        read_pfm(path)
    path.write_bytes(b"Pf\n2 2\n-1.0\n" + b"\x00" * 8)
    with pytest.raises(FormatError, match="expected 16 bytes, found 8"):
        read_pfm(path)
    with pytest.raises(InvalidArgumentError):
        write_pfm(np.zeros((2, 2, 4), np.float32), tmp_path / "x.pfm")


def test_image_8bit_scaling(tmp_path):
    # 255 -> 1.0 exactly, 128 -> 128/255.
    grid = ImageGrid.from_array(np.array([[[1.0], [128.0 / 255.0]]]))
    path = tmp_path / "g.png"
    write_image(grid, path, bits=8)
    back = read_image(path, precision="double")
    assert back.channels == 1
    assert back.data[0, 0, 0] == 1.0
    assert back.data[0, 1, 0] == 128.0 / 255.0


def test_image_write_rounds_half_away(tmp_path):
    # 0.5 at 8 bits stores byte 128 = round(127.5) away from zero.
    grid = ImageGrid.from_array(np.full((1, 1, 1), 0.5))
    path = tmp_path / "h.png"
    write_image(grid, path, bits=8)
    back = read_image(path, precision="double")
    assert back.data[0, 0, 0] == 128.0 / 255.0


def test_image_16bit_roundtrip_error_bound(tmp_path, rng):
    grid = ImageGrid.from_array(rng.random((8, 8, 3)))
    path = tmp_path / "c16.png"
    write_image(grid, path, bits=16)
    back = read_image(path, precision="double")
    assert np.max(np.abs(back.data - grid.data)) <= 0.5 / 65535.0 + 1e-12


def test_image_write_clamps(tmp_path):
    grid = ImageGrid.from_array(np.array([[[-0.5], [1.5]]]))
    path = tmp_path / "cl.png"
    write_image(grid, path, bits=8)
    back = read_image(path, precision="double")
    assert back.data[0, 0, 0] == 0.0
    assert back.data[0, 1, 0] == 1.0


def test_image_color_channel_order(tmp_path):
    # A red pixel must come back red through the BGR storage order.
    grid = ImageGrid.from_array(np.array([[[1.0, 0.0, 0.0]]]))
    path = tmp_path / "r.png"
    write_image(grid, path, bits=8)
    back = read_image(path, precision="double")
    assert np.array_equal(back.data[0, 0], [1.0, 0.0, 0.0])


def test_image_errors(tmp_path):
    with pytest.raises(FormatError, match="does not exist"):
        read_image(tmp_path / "missing.png")
    with pytest.raises(InvalidArgumentError):
        write_image(ImageGrid.from_array(np.zeros((1, 1, 2))), tmp_path / "x.png")
    with pytest.raises(InvalidArgumentError):
        write_image(ImageGrid.from_array(np.zeros((1, 1, 1))), tmp_path / "x.png", bits=12)
