"""Kernel backend selection.

The env var RDSCONLEY_BACKEND picks the implementation:

  auto   (default) numba when importable, numpy otherwise
  numba  require the jitted backend, fail if numba is missing
  numpy  force the pure-numpy fallback

Both backends expose the same functions and agree bitwise; see
benchmarks/bench_kernels.py for a speed comparison.
"""

import os

from ._numpy_impl import (  # noqa: F401  (family codes are backend-independent)
    BLOWUP,
    FAM_EXAMPLE1,
    FAM_IDENTITY,
    FAM_PITCHFORK,
    FAM_SUBCRITICAL,
)

_mode = os.environ.get("RDSCONLEY_BACKEND", "auto").strip().lower()
if _mode not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        "RDSCONLEY_BACKEND must be one of auto|numba|numpy, got %r" % _mode
    )

if _mode == "numpy":
    from . import _numpy_impl as _impl
else:
    try:
        from . import _numba_impl as _impl
    except ImportError:
        if _mode == "numba":
            raise
        from . import _numpy_impl as _impl

BACKEND = _impl.name

discrete_points = _impl.discrete_points
discrete_box_images = _impl.discrete_box_images
ode_points = _impl.ode_points
ode_box_images = _impl.ode_box_images
prune_alive = _impl.prune_alive
