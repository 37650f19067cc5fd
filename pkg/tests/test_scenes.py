import numpy as np
import pytest
from numpy.testing import assert_allclose

from softsplat import (
    InvalidArgumentError,
    backward_warp,
    make_scene,
)


def test_rigid_translate_flow_and_truth():
    sc = make_scene("rigid-translate", size=32, shift=4)
    assert np.all(sc.flow01.dx == 4.0) and np.all(sc.flow01.dy == 0.0)
    assert np.all(sc.flow10.dx == -4.0)
    # Ground truth at t = 0.5 is i0 shifted by 2 columns.
    assert sc.truth_time(2) == 0.5
    assert np.array_equal(sc.truth[2].data, np.roll(sc.i0.data, 2, axis=1))
    assert sorted(sc.truth) == [1, 2, 3]


def test_rigid_translate_flow_is_exact():
    # Brightness constancy holds wherever the correspondence stays in-frame.
    sc = make_scene("rigid-translate", size=32, shift=4)
    sampled = backward_warp(sc.i1, sc.flow01)
    residual = np.abs(sampled.data - sc.i0.data)[:, : 32 - 4]
    assert residual.max() < 1e-12


def test_two_layer_geometry_and_collision_band():
    sc = make_scene("two-layer", size=64, shift=8)
    x0, y0, fg_h, fg_w = sc.fg_rect
    # The foreground block is solid in i0 and displaced by 8 in i1.
    fg0 = sc.i0.data[y0 : y0 + fg_h, x0 : x0 + fg_w]
    assert np.all(fg0 == fg0[0, 0])
    assert np.array_equal(
        sc.i1.data[y0 : y0 + fg_h, x0 + 8 : x0 + 8 + fg_w], fg0
    )
    # At full displacement the collision band is `shift` columns wide.
    band = sc.collision_mask(8)
    assert band.sum() == 8 * fg_h
    assert np.array_equal(np.nonzero(band.any(axis=0))[0], np.arange(x0 + fg_w, x0 + 8 + fg_w))
    # Flows vanish off the moving rectangle.
    bg = np.ones((64, 64), dtype=bool)
    bg[y0 : y0 + fg_h, x0 : x0 + fg_w] = False
    assert np.all(sc.flow01.data[bg] == 0.0)
    assert np.all(sc.flow01.dx[~bg] == 8.0)


def test_two_layer_truth_draws_displaced_foreground():
    sc = make_scene("two-layer", size=64, shift=8)
    x0, y0, fg_h, fg_w = sc.fg_rect
    t4 = sc.truth[4].data
    fg_color = sc.i0.data[y0, x0]
    assert np.all(t4[y0 : y0 + fg_h, x0 + 4 : x0 + 4 + fg_w] == fg_color)
    # Background left of the rectangle is untouched.
    assert np.array_equal(t4[:, : x0 + 4], np.array(sc.i1.data[:, : x0 + 4]))


def test_zero_displacement_is_static():
    for kind in ("rigid-translate", "two-layer"):
        sc = make_scene(kind, size=32, shift=0)
        assert np.array_equal(sc.i0.data, sc.i1.data)
        assert np.all(sc.flow01.data == 0.0)
        assert np.all(sc.flow10.data == 0.0)
        assert sc.truth == {}


def test_rotating_scene_properties():
    sc = make_scene("rotating", size=48, shift=3.0)
    assert sc.truth == {}
    # Displacements cap near the requested rim arc length and vanish outside
    # the disk.
    mag = np.hypot(sc.flow01.dx, sc.flow01.dy)
    assert 2.0 < mag.max() <= 3.5
    corner = mag[:4, :4]
    assert np.all(corner == 0.0)
    # The static surround keeps i0 == i1 there.
    outside = mag == 0.0
    assert np.array_equal(sc.i0.data[outside], sc.i1.data[outside])


def test_rotating_flow_is_exact_inside_disk():
    size = 48
    sc = make_scene("rotating", size=size, shift=3.0)
    sampled = backward_warp(sc.i1, sc.flow01)
    c = (size - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    r = np.hypot(xs - c, ys - c)
    # Stay clear of the rim so the bilinear footprint never straddles the
    # disk edge; what remains is smooth-texture interpolation error.
    interior = r < 0.4 * size - 2.0
    err = np.abs(sampled.data - sc.i0.data)[interior]
    assert err.max() < 0.02


def test_scene_validation():
    with pytest.raises(InvalidArgumentError, match="unknown scene kind"):
        make_scene("zoom", size=32)
    with pytest.raises(InvalidArgumentError, match="size"):
        make_scene("rigid-translate", size=4)
    with pytest.raises(InvalidArgumentError, match="integer shift"):
        make_scene("two-layer", size=32, shift=2.5)
    with pytest.raises(InvalidArgumentError, match="leaves the frame"):
        make_scene("two-layer", size=32, shift=30)
    with pytest.raises(InvalidArgumentError, match="smaller than size"):
        make_scene("rigid-translate", size=32, shift=40)


def test_scene_values_stay_in_unit_range():
    for kind, shift in (("rigid-translate", 6), ("two-layer", 6), ("rotating", 2.0)):
        sc = make_scene(kind, size=32, shift=shift)
        for grid in (sc.i0, sc.i1, *sc.truth.values()):
            assert grid.data.min() >= 0.0 and grid.data.max() <= 1.0
