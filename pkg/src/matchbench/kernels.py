"""Backend selection for the Monte Carlo kernels.

The compiled extension is used when it imports; otherwise the pure-Python
reference kernels take over.  Both expose ``rsd_welfare``,
``rsd_star_welfare``, ``fact_welfare`` and ``stream_head``.
"""

from . import _kernels_py as python_backend
from .errors import ArgumentError

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

default_backend = compiled_backend if compiled_backend is not None else python_backend


def get_backend(name=None):
    """Kernel module by name: ``"cython"``, ``"python"`` or ``None`` for the default."""
    if name is None:
        return default_backend
    if name == "python":
        return python_backend
    if name in ("cython", "compiled"):
        if compiled_backend is None:
            raise ImportError("the compiled matchbench._kernels extension is not built")
        return compiled_backend
    raise ArgumentError(f"unknown kernel backend {name!r}")
