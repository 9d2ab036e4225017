"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``TCSCALE_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _fallback

fallback = _fallback

if os.environ.get("TCSCALE_PURE_PYTHON", "") not in ("", "0"):
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

active = compiled if compiled is not None else _fallback
BACKEND = active.BACKEND

bootstrap_slopes = active.bootstrap_slopes
sim_grid = active.sim_grid
sim_rmse = active.sim_rmse


def available_backends():
    return [m for m in (compiled, _fallback) if m is not None]
