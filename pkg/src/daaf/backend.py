"""Backend selection: compiled kernels when importable, pure Python otherwise.

Set ``DAAF_BACKEND=py`` to force the pure path or ``DAAF_BACKEND=compiled``
to insist on the extension (raising if it is missing).  Both backends
produce bit-identical trajectories; the compiled one is simply much faster.
"""

from __future__ import annotations

import os

_requested = os.environ.get("DAAF_BACKEND", "auto").strip().lower() or "auto"

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None

if _requested in ("py", "python", "pure"):
    kernels = None
elif _requested in ("c", "ext", "compiled"):
    if _compiled is None:
        raise ImportError(
            "DAAF_BACKEND requested the compiled kernels but daaf._kernels "
            "is not importable; build the extension or unset DAAF_BACKEND"
        )
    kernels = _compiled
elif _requested == "auto":
    kernels = _compiled
else:
    raise ValueError(f"unrecognized DAAF_BACKEND={_requested!r}")


def backend_name() -> str:
    return "compiled" if kernels is not None else "python"
