"""Kernel backend selection.

The compiled extension is preferred; the numpy implementation is used when
it failed to build.  ``use("python")`` switches explicitly, which the tests
and the benchmark use to compare both.
"""

from __future__ import annotations

from contextlib import contextmanager
from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS: dict[str, ModuleType] = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active: ModuleType = _compiled if _compiled is not None else _kernels_py


def available() -> list[str]:
    return list(_BACKENDS)


def kernels() -> ModuleType:
    return _active


def name() -> str:
    return _active.NAME


def use(backend: str) -> None:
    global _active
    try:
        _active = _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"backend {backend!r} not available; have {available()}") from None


@contextmanager
def using(backend: str):
    previous = _active.NAME
    use(backend)
    try:
        yield kernels()
    finally:
        use(previous)
