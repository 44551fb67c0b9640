"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is missing or when ``BOXFLOW_PURE_PYTHON`` is set (any non-empty
value).  Both expose the same functions with identical numerics.
"""

import os

if os.environ.get("BOXFLOW_PURE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.BACKEND

FAM_PITCHFORK = kernels.FAM_PITCHFORK
FAM_SEMISTABLE = kernels.FAM_SEMISTABLE
FAM_LORENZ = kernels.FAM_LORENZ

rk4_integrate = kernels.rk4_integrate
directed_chebyshev = kernels.directed_chebyshev
