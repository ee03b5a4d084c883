"""Hot per-shot kernel with a compiled backend and a numpy fallback.

The compiled extension is used when it has been built and
``QAUTH_PURE_PYTHON`` is unset; otherwise the numpy implementation is used.
Both share one signature, documented on ``_shots_py.simulate_shots``.
"""

import os

from . import _shots_py

BACKEND = "numpy"
simulate_shots = _shots_py.simulate_shots

if not os.environ.get("QAUTH_PURE_PYTHON"):
    try:
        from . import _shots as _compiled
    except ImportError:  # extension not built
        _compiled = None
    else:
        simulate_shots = _compiled.simulate_shots
        BACKEND = "cython"
else:
    _compiled = None


def get_backend(name=None):
    """Return the kernel function for ``name`` (``"cython"``, ``"numpy"`` or default)."""
    if name is None:
        return simulate_shots
    if name == "numpy":
        return _shots_py.simulate_shots
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel is not available")
        return _compiled.simulate_shots
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    return ["numpy"] + (["cython"] if _compiled is not None else [])
