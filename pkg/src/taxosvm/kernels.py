"""Kernel backend selection.

The compiled ``_core`` extension is used when importable; setting
``TAXOSVM_BACKEND=python`` forces the numpy fallback for the whole process.
"""

import os

from taxosvm import _pycore

try:
    from taxosvm import _core
except ImportError:  # extension not built
    _core = None

BACKENDS = {"python": _pycore}
if _core is not None:
    BACKENDS["cython"] = _core

if os.environ.get("TAXOSVM_BACKEND", "").lower() == "python" or _core is None:
    BACKEND = "python"
else:
    BACKEND = "cython"


def get_backend(name=None):
    """Kernel module by name; ``None`` gives the one selected at import."""
    name = name or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None
