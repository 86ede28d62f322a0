"""Hot-kernel backend selection.

The simulator's inner loops (substep integration with collision/arrival
detection, neighbor gathering, and the ORCA planner) exist twice: a compiled
Cython extension (``_fast``) and a pure numpy/python fallback (``_pure``).
The compiled backend is used when importable; set ``KDNAV_BACKEND=pure`` or
``KDNAV_BACKEND=fast`` to force one. Both produce identical results (see
tests/test_kernels.py); they differ only in speed.
"""

import os

from kdnav._kernels import _pure

_choice = os.environ.get("KDNAV_BACKEND", "").lower()

if _choice == "pure":
    _impl = _pure
elif _choice == "fast":
    from kdnav._kernels import _fast as _impl
else:
    try:
        from kdnav._kernels import _fast as _impl
    except ImportError:
        _impl = _pure

backend_name = "fast" if _impl is not _pure else "pure"

integrate_window = _impl.integrate_window
neighbor_table = _impl.neighbor_table
orca_velocities = _impl.orca_velocities
solve_lp2 = _impl.solve_lp2

pure = _pure


def get_backend(name):
    """Return the module implementing the named backend ('pure' or 'fast')."""
    if name == "pure":
        return _pure
    if name == "fast":
        from kdnav._kernels import _fast

        return _fast
    raise ValueError(f"unknown backend {name!r}")
