"""Kernel backend selection.

The compiled extension (`pex._kernels._ctree`) is preferred when it built;
otherwise the numpy backend is used. Set ``PEX_KERNELS=python`` or
``PEX_KERNELS=c`` to force a backend (the latter fails fast if the
extension is missing).
"""

from __future__ import annotations

import os

from . import _numpy_backend

_BACKENDS = {"python": _numpy_backend}

try:
    from . import _ctree  # type: ignore[attr-defined]

    _BACKENDS["c"] = _ctree
except ImportError:  # extension not built
    _ctree = None


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ImportError(
            f"kernel backend {name!r} unavailable; built backends: {available_backends()}"
        ) from None


_requested = os.environ.get("PEX_KERNELS", "").strip().lower()
if _requested:
    _active = get_backend(_requested)
else:
    _active = _BACKENDS.get("c", _numpy_backend)

ACTIVE_BACKEND = "c" if _active is _BACKENDS.get("c") else "python"
best_split = _active.best_split
predict_forest = _active.predict_forest
