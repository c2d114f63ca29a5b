"""Kernel selector: compiled extension if present, pure Python otherwise.

Set QVA_PURE_PYTHON=1 to force the fallback (used by the benchmark and by
tests that pin down kernel-independence of results).
"""

import os

if os.environ.get("QVA_PURE_PYTHON"):
    from qva._kernels_py import conv_window, axpy_int, scale_into

    BACKEND = "python"
else:
    try:
        from qva._speedups import conv_window, axpy_int, scale_into

        BACKEND = "compiled"
    except ImportError:
        from qva._kernels_py import conv_window, axpy_int, scale_into

        BACKEND = "python"

__all__ = ["conv_window", "axpy_int", "scale_into", "BACKEND"]
