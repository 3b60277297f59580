"""Simulation kernels: compiled when available, pure Python otherwise.

Set ``PASSIVE_IFIR_PURE_PYTHON=1`` to force the fallback.
"""

import os

from passive_ifir import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("PASSIVE_IFIR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from passive_ifir import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

ss_filter = _impl.ss_filter
tf_filter = _impl.tf_filter
closed_loop_linear = _impl.closed_loop_linear
two_cart_open_loop = _impl.two_cart_open_loop
two_cart_closed_loop = _impl.two_cart_closed_loop
spring_force = _kernels_py.spring_force

__all__ = ["BACKEND", "ss_filter", "tf_filter", "closed_loop_linear",
           "two_cart_open_loop", "two_cart_closed_loop", "spring_force"]
