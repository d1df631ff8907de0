"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``LATENCYLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if not os.environ.get("LATENCYLAB_PURE_PYTHON"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py
else:
    _impl = _kernels_py

lag_contributions = _impl.lag_contributions
bootstrap_means = _impl.bootstrap_means
feasible_pairs = _impl.feasible_pairs
dijkstra = _impl.dijkstra

__all__ = ["BACKEND", "bootstrap_means", "dijkstra", "feasible_pairs", "lag_contributions"]
