"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly, unless the environment
variable ``HEATLAB_DISABLE_NUMBA`` is set to a truthy value (``1``, ``true``,
``yes``).  The flag is read once at import time.  Both implementations stay
importable as :mod:`heatlab.kernels._numpy` / :mod:`heatlab.kernels._numba`
so they can be compared directly.
"""
import os

from . import _numpy

_TRUTHY = {"1", "true", "yes", "on"}


def _numba_requested():
    return os.environ.get("HEATLAB_DISABLE_NUMBA", "").strip().lower() not in _TRUTHY


BACKEND = "numpy"
_impl = _numpy
if _numba_requested():
    try:
        from . import _numba

        _impl = _numba
        BACKEND = "numba"
    except ImportError:  # numba missing or broken; numpy path still works
        pass

displacement_table = _impl.displacement_table
assemble_rates = _impl.assemble_rates
gth_stationary = _impl.gth_stationary
rk4_steps = _impl.rk4_steps

__all__ = [
    "BACKEND",
    "displacement_table",
    "assemble_rates",
    "gth_stationary",
    "rk4_steps",
]
