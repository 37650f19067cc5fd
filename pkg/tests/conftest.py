import os

# Thread settings must land before numba initializes its threading layer.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))

import numpy as np
import pytest

from softsplat._kernels import available_backends


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: spec acceptance gate")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=available_backends())
def backend(request):
    """Run a test once per compute backend (numpy, and numba when importable)."""
    return request.param
