"""Hot kernels: compiled extension when built, numpy fallback otherwise.

Set ``CLUSTERWALK_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKENDS = {"python": _pykernels.evolve_ordered}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels.evolve_ordered

if _ckernels is not None and os.environ.get("CLUSTERWALK_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
else:
    BACKEND = "python"

evolve_ordered = BACKENDS[BACKEND]


def get_kernel(name: str | None = None):
    """Kernel by backend name (``None`` for the import-time selection)."""
    if name is None:
        return evolve_ordered
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
