"""Kernel backend selection.

Prefers the compiled `_spacetime` extension; falls back to the pure-Python
twin when the extension is missing or CONVOYPLAN_PURE=1 is set.  Both
backends are behaviourally identical (see tests/test_kernels.py).
"""

from __future__ import annotations

import os

if os.environ.get("CONVOYPLAN_PURE") == "1":
    from . import _spacetime_py as _impl
else:
    try:
        from . import _spacetime as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _spacetime_py as _impl

BACKEND: str = _impl.BACKEND
grid_distances = _impl.grid_distances
find_path_spacetime = _impl.find_path_spacetime
