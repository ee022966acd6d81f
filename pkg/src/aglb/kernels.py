"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``AGLB_PURE_PYTHON=1`` to force the fallback. Both backends produce the
same hashes exactly and the same floats up to summation order.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("AGLB_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

fnv1a64 = _impl.fnv1a64
hash_keys = _impl.hash_keys
row_logits = _impl.row_logits
segment_log_softmax = _impl.segment_log_softmax
scatter_rows = _impl.scatter_rows

__all__ = [
    "BACKEND",
    "fnv1a64",
    "hash_keys",
    "row_logits",
    "segment_log_softmax",
    "scatter_rows",
]
