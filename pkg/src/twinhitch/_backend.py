"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``TWINHITCH_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

_MODULES = {"compiled": "twinhitch._kernels", "python": "twinhitch._kernels_py"}


def load(name):
    """Import and return the kernel module for ``name`` ('compiled' or 'python')."""
    try:
        return importlib.import_module(_MODULES[name])
    except KeyError:
        raise ValueError(f"unknown backend {name!r}") from None


def available():
    names = ["python"]
    try:
        load("compiled")
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


def _default():
    if os.environ.get("TWINHITCH_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    return available()[0]


name = _default()
kernels = load(name)


def use(backend):
    """Switch the active backend; returns the previous name."""
    global kernels, name
    previous = name
    kernels = load(backend)
    name = backend
    return previous
