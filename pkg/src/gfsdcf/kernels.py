"""Backend selection for the hot solver kernels.

The compiled extension is used when it was built and importable; setting
``GFSDCF_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
solve_rank_one = _kernels_py.solve_rank_one
group_shrink = _kernels_py.group_shrink

if os.environ.get("GFSDCF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        solve_rank_one = _ckernels.solve_rank_one
        group_shrink = _ckernels.group_shrink


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _kernels_py}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
