"""Reference numpy kernels; same signatures as the compiled ``_ckernels``.

``x`` is the working isometry with shape ``(DA, DB, K)``: row indices of the
current A and B registers and one column per target basis vector.
"""

import numpy as np


def apply_local(x, ua, ub):
    """Return ``(ua (x) ub) x``."""
    y = np.tensordot(ua, x, axes=(1, 0))
    y = np.tensordot(ub, y, axes=(1, 1))
    return np.ascontiguousarray(y.transpose(1, 0, 2))


def apply_native(x, w, ma, na, mb, nb):
    """Apply ``w`` (shape ``(na*nb, na*nb)``) to the least significant ``na``/``nb`` factors."""
    k = x.shape[2]
    x5 = x.reshape(ma, na, mb, nb, k)
    w4 = w.reshape(na, nb, na, nb)
    y = np.einsum("ijkl,akblm->aibjm", w4, x5, optimize=True)
    return np.ascontiguousarray(y.reshape(ma * na, mb * nb, k))
