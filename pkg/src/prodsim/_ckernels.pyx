# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled counterparts of ``_pykernels``.

Operators are walked through their nonzero entries (CSR), which is where the
protocol segments spend most of their time: permutations, diagonal phases and
identity-padded blocks. Complex arithmetic is spelled out on the interleaved
real/imaginary buffers. Large dense local unitaries go to the BLAS-backed
numpy kernel instead.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


from . import _pykernels

# dense BLAS does roughly this many flops in the time the sparse loop does one
BLAS_ADVANTAGE = 8


def _csr(u):
    cdef const double complex[:, ::1] uv = np.ascontiguousarray(u, dtype=np.complex128)
    cdef Py_ssize_t n = uv.shape[0], m = uv.shape[1], r, c, nnz = 0
    indptr = np.zeros(n + 1, dtype=np.intp)
    cols = np.empty(n * m, dtype=np.intp)
    vals = np.empty(2 * n * m, dtype=np.float64)
    cdef Py_ssize_t[::1] ip = indptr, cv = cols
    cdef double[::1] vv = vals
    cdef double complex z
    for r in range(n):
        for c in range(m):
            z = uv[r, c]
            if z.real != 0.0 or z.imag != 0.0:
                cv[nnz] = c
                vv[2 * nnz] = z.real
                vv[2 * nnz + 1] = z.imag
                nnz += 1
        ip[r + 1] = nnz
    return indptr, cols, vals


cdef void _rows(double[::1] out, const double[::1] src, Py_ssize_t nrow, Py_ssize_t block,
                const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] cols, const double[::1] vals,
                Py_ssize_t outer, Py_ssize_t outer_stride) noexcept nogil:
    # out[o, r, :] = sum_c u[r, c] src[o, c, :] with each (o, r) row holding `block` complex numbers
    cdef Py_ssize_t o, r, p, c, i, base_o, dst, s
    cdef double vr, vi, xr, xi
    for o in range(outer):
        base_o = o * outer_stride
        for r in range(nrow):
            dst = base_o + 2 * r * block
            for p in range(indptr[r], indptr[r + 1]):
                c = cols[p]
                vr = vals[2 * p]
                vi = vals[2 * p + 1]
                s = base_o + 2 * c * block
                for i in range(block):
                    xr = src[s + 2 * i]
                    xi = src[s + 2 * i + 1]
                    out[dst + 2 * i] += vr * xr - vi * xi
                    out[dst + 2 * i + 1] += vr * xi + vi * xr


def apply_local(x, ua, ub):
    cdef Py_ssize_t da = x.shape[0], db = x.shape[1], nk = x.shape[2]
    sparse_work = np.count_nonzero(ua) * db + np.count_nonzero(ub) * da
    if sparse_work * BLAS_ADVANTAGE > (da + db) * da * db and da * db * nk > 4096:
        return _pykernels.apply_local(x, ua, ub)
    tmp = np.zeros((da, db, nk), dtype=np.complex128)
    out = np.zeros((da, db, nk), dtype=np.complex128)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.complex128).reshape(-1).view(np.float64)
    cdef double[::1] tv = tmp.reshape(-1).view(np.float64)
    cdef double[::1] ov = out.reshape(-1).view(np.float64)
    pa, ca, va = _csr(ua)
    pb, cb, vb = _csr(ub)
    cdef const Py_ssize_t[::1] pa_v = pa, ca_v = ca, pb_v = pb, cb_v = cb
    cdef const double[::1] va_v = va, vb_v = vb
    with nogil:
        _rows(tv, xv, da, db * nk, pa_v, ca_v, va_v, 1, 0)
        _rows(ov, tv, db, nk, pb_v, cb_v, vb_v, da, 2 * db * nk)
    return out


def apply_native(x, w, Py_ssize_t ma, Py_ssize_t na, Py_ssize_t mb, Py_ssize_t nb):
    cdef Py_ssize_t nk = x.shape[2]
    cdef Py_ssize_t a, b, i, j, p, col, i2, j2, q, src, dst
    cdef double vr, vi, xr, xi
    out = np.zeros((ma * na, mb * nb, nk), dtype=np.complex128)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.complex128).reshape(-1).view(np.float64)
    cdef double[::1] ov = out.reshape(-1).view(np.float64)
    pw, cw, vw = _csr(w)
    cdef const Py_ssize_t[::1] pw_v = pw, cw_v = cw
    cdef const double[::1] vw_v = vw
    cdef Py_ssize_t row_stride = 2 * mb * nb * nk
    with nogil:
        for a in range(ma):
            for b in range(mb):
                for i in range(na):
                    for j in range(nb):
                        dst = (a * na + i) * row_stride + 2 * (b * nb + j) * nk
                        for p in range(pw_v[i * nb + j], pw_v[i * nb + j + 1]):
                            col = cw_v[p]
                            i2 = col // nb
                            j2 = col % nb
                            vr = vw_v[2 * p]
                            vi = vw_v[2 * p + 1]
                            src = (a * na + i2) * row_stride + 2 * (b * nb + j2) * nk
                            for q in range(nk):
                                xr = xv[src + 2 * q]
                                xi = xv[src + 2 * q + 1]
                                ov[dst + 2 * q] += vr * xr - vi * xi
                                ov[dst + 2 * q + 1] += vr * xi + vi * xr
    return out
