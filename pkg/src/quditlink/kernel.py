"""Trajectory-kernel backend selection.

Prefers the compiled extension and falls back to the pure-NumPy kernel when
the extension is unavailable.  Set ``QUDITLINK_KERNEL`` to ``python`` or
``cython`` to force a backend (forcing ``cython`` raises if it is missing).
"""

from __future__ import annotations

import os

from . import _kernel_py

_forced = os.environ.get("QUDITLINK_KERNEL", "").strip().lower()

if _forced == "python":
    _impl = _kernel_py
elif _forced == "cython":
    from . import _kernel_cy as _impl  # noqa: F401  (raises if not built)
elif _forced:
    raise ValueError(
        f"QUDITLINK_KERNEL={_forced!r} is not a backend (use 'python' or 'cython')"
    )
else:
    try:
        from . import _kernel_cy as _impl
    except ImportError:
        _impl = _kernel_py

BACKEND: str = _impl.BACKEND
run_chunk = _impl.run_chunk
