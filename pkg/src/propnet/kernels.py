"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``PROPNET_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the pure-Python fallback is used.  ``BACKEND`` names the
active one.
"""

import os

from propnet import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("PROPNET_PURE_PYTHON", "0") in ("", "0"):
    try:
        from propnet import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

bfs = _impl.bfs
distance_sum = _impl.distance_sum
gradient_tree = _impl.gradient_tree
entry_points = _impl.entry_points
forward_transaction = _impl.forward_transaction

__all__ = ["BACKEND", "bfs", "distance_sum", "gradient_tree", "entry_points", "forward_transaction",
           "python_backend", "compiled_backend"]
