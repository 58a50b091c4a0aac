"""Episode kernel dispatch.

The compiled ``_core`` extension is used when it imports; otherwise the
pure-Python implementations are used. Set ``EVOPLAT_PURE_PYTHON=1`` to
force the fallback. Both backends return identical results.
"""

import os

from . import _kernels_py

BACKEND = "python"
run_actions = _kernels_py.run_actions
run_network = _kernels_py.run_network

if not os.environ.get("EVOPLAT_PURE_PYTHON"):
    try:
        from . import _core
    except ImportError:
        _core = None
    if _core is not None:
        BACKEND = "cython"
        run_actions = _core.run_actions
        run_network = _core.run_network


def backends():
    """Mapping of every importable backend name to its kernel pair."""
    found = {"python": (_kernels_py.run_actions, _kernels_py.run_network)}
    try:
        from . import _core as core
    except ImportError:
        return found
    found["cython"] = (core.run_actions, core.run_network)
    return found
