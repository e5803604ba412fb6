"""Select the compiled RK4 kernel when it was built, else the numpy loop.

Set ``LINDCOLLAPSE_PURE_PYTHON=1`` to force the fallback. Above
``COMPILED_MAX_DIM`` the dense d^4 matvec is faster through numpy's BLAS,
so even a compiled build routes those sizes to the fallback.
"""

import os

from . import _rk4_py

COMPILED_MAX_DIM = 8

compiled_rk4_run = None
if not os.environ.get("LINDCOLLAPSE_PURE_PYTHON"):
    try:
        from ._rk4 import rk4_run as compiled_rk4_run
    except ImportError:
        pass

BACKEND = "python" if compiled_rk4_run is None else "cython"


def rk4_run(S, y0, d, h, nsteps, record_every):
    if compiled_rk4_run is not None and d <= COMPILED_MAX_DIM:
        return compiled_rk4_run(S, y0, d, h, nsteps, record_every)
    return _rk4_py.rk4_run(S, y0, d, h, nsteps, record_every)


__all__ = ["rk4_run", "BACKEND", "COMPILED_MAX_DIM"]
