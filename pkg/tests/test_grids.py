import numpy as np
import pytest

from softsplat import (
    FlowField,
    ImageGrid,
    ImportanceMap,
    InvalidArgumentError,
    make_flow,
    make_grid,
    scale_flow,
)


def test_image_grid_freezes_and_copies():
    buf = np.zeros((2, 3, 1), dtype=np.float64)
    grid = ImageGrid.from_array(buf)
    buf[0, 0, 0] = 7.0
    assert grid.data[0, 0, 0] == 0.0
    with pytest.raises(ValueError):
        grid.data[0, 0, 0] = 1.0


def test_image_grid_accepts_2d_as_single_channel():
    grid = ImageGrid.from_array(np.ones((4, 5)))
    assert grid.channels == 1
    assert grid.height == 4 and grid.width == 5


def test_image_grid_precision_names():
    assert ImageGrid.from_array(np.zeros((1, 1, 1), np.float32)).precision == "single"
    assert ImageGrid.from_array(np.zeros((1, 1, 1), np.float64)).precision == "double"


def test_image_grid_rejects_bad_inputs():
    with pytest.raises(InvalidArgumentError):
        ImageGrid.from_array(np.zeros((2, 2, 1), dtype=np.int32))
    with pytest.raises(InvalidArgumentError):
        ImageGrid.from_array(np.zeros((0, 2, 1)))
    with pytest.raises(InvalidArgumentError):
        ImageGrid.from_array(np.array([[[np.nan]]]))
    with pytest.raises(InvalidArgumentError):
        ImageGrid.from_array(np.array([[[np.inf]]]))
    with pytest.raises(InvalidArgumentError):
        ImageGrid(np.zeros((4,)))


def test_flow_field_components():
    data = np.zeros((2, 2, 2))
    data[:, :, 0] = 1.5
    data[:, :, 1] = -2.0
    flow = FlowField.from_array(data)
    assert np.all(flow.dx == 1.5)
    assert np.all(flow.dy == -2.0)


def test_flow_field_requires_two_components():
    with pytest.raises(InvalidArgumentError):
        FlowField.from_array(np.zeros((2, 2, 3)))


def test_importance_map_is_2d():
    imp = ImportanceMap.from_array(np.zeros((3, 4)))
    assert imp.height == 3 and imp.width == 4
    with pytest.raises(InvalidArgumentError):
        ImportanceMap.from_array(np.zeros((3, 4, 1)))


def test_make_grid_and_make_flow():
    grid = make_grid(2, 3, channels=2, fill=0.25, precision="single")
    assert grid.data.shape == (2, 3, 2)
    assert grid.data.dtype == np.float32
    assert np.all(grid.data == 0.25)
    flow = make_flow(2, 3, dx=1.0, dy=-0.5)
    assert np.all(flow.dx == 1.0) and np.all(flow.dy == -0.5)
    with pytest.raises(InvalidArgumentError):
        make_grid(0, 3)
    with pytest.raises(InvalidArgumentError):
        make_flow(2, 2, dx=np.nan)


def test_scale_flow_keeps_dtype():
    flow = make_flow(2, 2, dx=4.0, precision="single")
    half = scale_flow(flow, 0.5)
    assert half.data.dtype == np.float32
    assert np.all(half.dx == 2.0)
    with pytest.raises(InvalidArgumentError):
        scale_flow(flow.data, 0.5)
    with pytest.raises(InvalidArgumentError):
        scale_flow(flow, np.inf)


def test_from_array_precision_cast():
    grid = ImageGrid.from_array(np.zeros((1, 1, 1), np.float64), precision="single")
    assert grid.data.dtype == np.float32
    with pytest.raises(InvalidArgumentError):
        ImageGrid.from_array(np.zeros((1, 1, 1)), precision="half")
