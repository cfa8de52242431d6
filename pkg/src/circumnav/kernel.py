"""Selection of the integration kernel.

The compiled kernel is used when it was built; otherwise the numpy kernel.
Set ``CIRCUMNAV_KERNEL`` to ``python`` or ``c`` to force one.
"""

from __future__ import annotations

import os
from types import ModuleType

from circumnav import _pykernel

try:
    from circumnav import _ckernel
except ImportError:  # extension not built
    _ckernel = None

BACKENDS = ("c", "python")


def available() -> list[str]:
    return [name for name in BACKENDS if name == "python" or _ckernel is not None]


def get_kernel(name: str | None = None) -> ModuleType:
    if name is None:
        name = os.environ.get("CIRCUMNAV_KERNEL", "auto")
    if name == "auto":
        return _ckernel if _ckernel is not None else _pykernel
    if name == "python":
        return _pykernel
    if name == "c":
        if _ckernel is None:
            raise ImportError("compiled kernel circumnav._ckernel is not built")
        return _ckernel
    raise ValueError(f"unknown kernel {name!r}; choose from auto, {', '.join(BACKENDS)}")


def kernel_name(kernel: ModuleType) -> str:
    return "c" if kernel is _ckernel and _ckernel is not None else "python"


DEFAULT = get_kernel()
