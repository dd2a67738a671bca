"""Backend selection for the ascent kernels.

The compiled extension is used when importable. Setting ``QCC_PURE_PYTHON=1``
forces the numpy fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _ascent_py


def _load_compiled() -> ModuleType | None:
    try:
        from . import _ascent
    except ImportError:
        return None
    return _ascent


_compiled = _load_compiled()

BACKENDS: dict[str, ModuleType] = {"python": _ascent_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

if os.environ.get("QCC_PURE_PYTHON", "") not in ("", "0") or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_active = BACKENDS[BACKEND]
ascend_batch = _active.ascend_batch
objective_batch = _active.objective_batch


def get(name: str) -> ModuleType:
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
