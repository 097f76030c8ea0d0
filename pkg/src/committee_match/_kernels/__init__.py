"""Fixed-point iteration kernels: compiled extension with NumPy fallback.

The compiled backend is selected at import when available; set
COMMITTEE_MATCH_BACKEND=python or =compiled to force one.  Both backends
implement the same sweep (demands, allocation, residual, damped price
update) with identical semantics; trajectories are deterministic within a
backend.
"""

from __future__ import annotations

import os

from . import _ref

try:
    from . import _speedups
except ImportError:  # extension not built
    _speedups = None

_forced = os.environ.get("COMMITTEE_MATCH_BACKEND")
if _forced == "python":
    ACTIVE = "python"
elif _forced == "compiled":
    if _speedups is None:
        raise ImportError(
            "COMMITTEE_MATCH_BACKEND=compiled but the extension is not built"
        )
    ACTIVE = "compiled"
elif _forced is None:
    ACTIVE = "compiled" if _speedups is not None else "python"
else:
    raise ImportError(f"unknown COMMITTEE_MATCH_BACKEND {_forced!r}")


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _speedups is not None else ("python",)


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    name = name or ACTIVE
    if name in ("auto", None):
        name = ACTIVE
    if name == "python":
        return _ref
    if name == "compiled":
        if _speedups is None:
            raise RuntimeError("compiled backend requested but not built")
        return _speedups
    raise ValueError(f"unknown backend {name!r}")


def backend_name(name: str | None = None) -> str:
    return ACTIVE if name in (None, "auto") else name
