"""Kernel backend selection.

Prefers the compiled extension built from ``_kernel.pyx``; falls back to
the pure-Python twin when the extension is unavailable.  Both expose the
same functions and status codes, so callers never branch on the backend.
"""

from __future__ import annotations

try:  # pragma: no cover - exercised only in one of the two install modes
    from recbound import _kernel as _impl

    COMPILED = True
except ImportError:  # pragma: no cover
    from recbound import _kernel_py as _impl

    COMPILED = False

BACKEND = "compiled" if COMPILED else "python"

ROOT_FINITE = _impl.ROOT_FINITE
ROOT_UNIT = _impl.ROOT_UNIT
ROOT_INFINITE = _impl.ROOT_INFINITE
ROOT_OVERFLOW = _impl.ROOT_OVERFLOW

residual = _impl.residual
term_root = _impl.term_root
roots_batch = _impl.roots_batch
