"""Select the propagation kernel backend.

The compiled extension is used when it was built; setting the environment
variable ``MIPCONFLICT_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os
from types import ModuleType

from . import _kernels_py


def _load_compiled() -> ModuleType | None:
    if os.environ.get("MIPCONFLICT_PURE_PYTHON"):
        return None
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()
backend: ModuleType = _compiled if _compiled is not None else _kernels_py
BACKEND = "cython" if _compiled is not None else "python"


def available() -> dict[str, ModuleType]:
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    else:
        try:
            from . import _kernels
            out["cython"] = _kernels
        except ImportError:
            pass
    return out


max_activity = backend.max_activity
row_deductions = backend.row_deductions
conflict_state = backend.conflict_state
