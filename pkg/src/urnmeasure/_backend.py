"""Select the counting-kernel implementation at import time.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``URNMEASURE_PURE_PYTHON`` is set to a non-empty value,
the numpy fallback is used.  Both expose ``at_least_counts`` and
``arc_distinct_table`` with identical results.
"""
import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and not os.environ.get("URNMEASURE_PURE_PYTHON"):
    impl = _compiled
    BACKEND = "cython"
else:
    impl = _fallback
    BACKEND = "python"


def get(name: str):
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available() -> list:
    return ["python"] + (["cython"] if _compiled is not None else [])
