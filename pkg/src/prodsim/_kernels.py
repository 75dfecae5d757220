"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``PRODSIM_PURE_PYTHON=1`` to force the numpy path.
"""

import os

from . import _pykernels

BACKEND = "python"
if not os.environ.get("PRODSIM_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

apply_local = _impl.apply_local
apply_native = _impl.apply_native
