"""Backend selection: compiled Cython kernels when available, numpy
otherwise.  Set COOPMAC_BACKEND=python or =compiled to force a choice."""
from __future__ import annotations

import os

from . import pykern

_requested = os.environ.get("COOPMAC_BACKEND", "").strip().lower()

_compiled = None
if _requested != "python":
    try:
        from . import _kernels as _compiled  # noqa: F401
    except ImportError:
        _compiled = None
        if _requested == "compiled":
            raise ImportError(
                "COOPMAC_BACKEND=compiled but the compiled kernels are not "
                "built; run `pip install -e .` with a C compiler available")

if _compiled is not None:
    kernels = _compiled
    BACKEND = "compiled"
else:
    kernels = pykern
    BACKEND = "python"


def backend_name() -> str:
    return BACKEND


def available_backends():
    out = {"python": pykern}
    if _compiled is not None:
        out["compiled"] = _compiled
    else:
        try:
            from . import _kernels  # noqa: F401
            out["compiled"] = _kernels
        except ImportError:
            pass
    return out
