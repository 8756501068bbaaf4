"""Backend selection for the diffusion kernels.

numba is used when importable unless ``CRITNODES_DISABLE_NUMBA`` is set to a
non-empty value other than ``0``; otherwise the pure-numpy kernels run. Both
backends return identical integers for identical inputs.
"""

import os

from critnodes import _kernels_numpy

__all__ = ["BACKEND", "get_backend", "ic_active", "lt_active", "ic_counts", "lt_counts",
           "ic_prefix_totals", "lt_prefix_totals"]


def _numba_disabled() -> bool:
    flag = os.environ.get("CRITNODES_DISABLE_NUMBA", "")
    return flag not in ("", "0")


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('numba' or 'numpy'); None picks the default."""
    if name is None:
        name = "numpy" if _numba_disabled() else "numba"
    if name == "numpy":
        return _kernels_numpy
    if name == "numba":
        try:
            from critnodes import _kernels_numba
        except ImportError:
            return _kernels_numpy
        return _kernels_numba
    raise ValueError(f"unknown kernel backend {name!r}")


_impl = get_backend()
BACKEND = "numba" if _impl.__name__.endswith("numba") else "numpy"

ic_active = _impl.ic_active
lt_active = _impl.lt_active
ic_counts = _impl.ic_counts
lt_counts = _impl.lt_counts
ic_prefix_totals = _impl.ic_prefix_totals
lt_prefix_totals = _impl.lt_prefix_totals
