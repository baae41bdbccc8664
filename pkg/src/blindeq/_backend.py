"""Selects the compiled or pure-Python sample-loop kernels at import.

Set ``BLINDEQ_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py as python_kernels

try:
    from . import _kernels as compiled_kernels
except ImportError:
    compiled_kernels = None

if compiled_kernels is not None and not os.environ.get("BLINDEQ_PURE_PYTHON"):
    kernels = compiled_kernels
    BACKEND = "cython"
else:
    kernels = python_kernels
    BACKEND = "python"


def get_kernels(name=None):
    """Kernel module by name (``"cython"`` / ``"python"``); default is the active one."""
    if name is None:
        return kernels
    if name == "python":
        return python_kernels
    if name == "cython":
        if compiled_kernels is None:
            raise ImportError("compiled kernels are not built")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")
