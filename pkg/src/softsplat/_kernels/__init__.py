"""Interchangeable kernel backends.

Two array-level implementations of the same contract: a numba JIT backend
whose parallel scatter is bitwise deterministic for any worker count, and a
pure-numpy fallback that needs nothing beyond numpy.  Selection order:

1. an explicit name passed to ``get_backend``
2. the ``SOFTSPLAT_BACKEND`` environment variable (auto / numba / numpy)
3. "auto": numba when importable, numpy otherwise
"""

import os

# Raise numba's thread ceiling before it is first imported anywhere in the
# process, so worker counts above the core count remain selectable, and pin
# the portable threading layer.  Only defaults: explicit environment wins.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from ..errors import InvalidArgumentError
from . import numpy_impl

_numba_impl = None
_numba_error = None


def _load_numba():
    global _numba_impl, _numba_error
    if _numba_impl is None and _numba_error is None:
        try:
            from . import numba_impl

            _numba_impl = numba_impl
        except Exception as exc:  # numba missing or broken; fallback covers it
            _numba_error = exc
    return _numba_impl


def get_backend(name=None):
    """Resolve a backend module by name, env variable, or availability."""
    if name is None:
        name = os.environ.get("SOFTSPLAT_BACKEND", "auto")
    name = str(name).strip().lower() or "auto"
    if name not in ("auto", "numba", "numpy"):
        raise InvalidArgumentError(
            f"unknown backend {name!r}; choose 'auto', 'numba' or 'numpy'"
        )
    if name == "numpy":
        return numpy_impl
    impl = _load_numba()
    if impl is None:
        if name == "numba":
            raise InvalidArgumentError(
                f"numba backend requested but not importable: {_numba_error}"
            )
        return numpy_impl
    return impl


def available_backends():
    """Names of backends that import cleanly on this machine."""
    names = ["numpy"]
    if _load_numba() is not None:
        names.append("numba")
    return names
