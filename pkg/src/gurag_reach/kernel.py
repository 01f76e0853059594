"""Search-kernel selection: compiled extension when usable, pure Python otherwise.

The compiled kernel handles states up to a fixed word budget; wider instances
fall back to the pure implementation transparently.  Outcomes are identical by
contract (tested), only throughput differs.
"""

from __future__ import annotations

from typing import Optional

from . import _kernel_py
from .encoding import CompiledInstance

try:
    from . import _kernel as _compiled  # built from _kernel.pyx
except ImportError:  # pragma: no cover - depends on how the package was built
    _compiled = None

HAVE_COMPILED = _compiled is not None


def compiled_supports(ci: CompiledInstance) -> bool:
    return HAVE_COMPILED and ci.nbits <= _compiled.MAX_BITS


def select(ci: CompiledInstance, engine: Optional[str] = None):
    """Pick the kernel module for this instance; ``engine`` may force one."""
    if engine in (None, "auto"):
        return _compiled if compiled_supports(ci) else _kernel_py
    if engine == "python":
        return _kernel_py
    if engine == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available in this build")
        if ci.nbits > _compiled.MAX_BITS:
            raise RuntimeError(
                f"instance needs {ci.nbits} bits; compiled kernel supports {_compiled.MAX_BITS}"
            )
        return _compiled
    raise ValueError(f"unknown kernel {engine!r}")
