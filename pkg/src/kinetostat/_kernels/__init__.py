"""Kernel backend selection.

The compiled extension is preferred when present; the numpy kernels are
the fallback. Set KINETOSTAT_KERNELS=pure|compiled to force a backend
(``compiled`` raises if the extension is not built).
"""

from __future__ import annotations

import os

from .program import ChainProgram, ProgramBuilder
from . import _pykernels

__all__ = [
    "ChainProgram",
    "ProgramBuilder",
    "forward",
    "jacobian",
    "backend_name",
    "available_backends",
]


def _load_compiled():
    from . import _core  # noqa: PLC0415  (deferred: extension may be absent)

    return _core


def _select():
    requested = os.environ.get("KINETOSTAT_KERNELS", "auto").strip().lower()
    if requested not in ("auto", "compiled", "pure"):
        raise ValueError(
            f"KINETOSTAT_KERNELS={requested!r}; expected auto, compiled or pure"
        )
    if requested == "pure":
        return _pykernels
    try:
        return _load_compiled()
    except ImportError:
        if requested == "compiled":
            raise ImportError(
                "KINETOSTAT_KERNELS=compiled but the extension is not built; "
                "reinstall with a C compiler or use KINETOSTAT_KERNELS=pure"
            ) from None
        return _pykernels


_impl = _select()

forward = _impl.forward
jacobian = _impl.jacobian


def backend_name() -> str:
    """Name of the kernel backend selected at import."""
    return _impl.BACKEND


def available_backends() -> dict:
    """All importable backends, keyed by name (for tests and benchmarks)."""
    backends = {"pure": _pykernels}
    try:
        backends["compiled"] = _load_compiled()
    except ImportError:
        pass
    return backends
