# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled subset search for the reflectance-combination fits."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def subset_residuals_best(
    const double[:, ::1] B,
    const double[::1] tt,
    const cnp.int64_t[:, ::1] combos,
    const double[:, :, ::1] Linv,
    const cnp.uint8_t[::1] valid,
    double tie_tol,
):
    """Best subset per target column of ``B`` (candidate-by-target inner products).

    For subset s, the squared LS residual is ``tt - ||Linv_s b_s||^2``. The
    chosen subset is the first (in the given order) whose residual is within
    ``tie_tol * tt`` of the minimum.
    """
    cdef Py_ssize_t n_t = B.shape[1], n_s = combos.shape[0], p = combos.shape[1]
    cdef Py_ssize_t t, s, k, l
    cdef double acc, y, r, best, lim
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_idx = np.empty(n_t, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_res = np.empty(n_t, dtype=np.float64)
    cdef double[::1] buf = np.empty(n_s, dtype=np.float64)
    cdef double[4] bs
    if p > 4:
        raise ValueError("subsets of more than 4 candidates are not supported")
    with nogil:
        for t in range(n_t):
            best = 1e308
            for s in range(n_s):
                if not valid[s]:
                    buf[s] = 1e308
                    continue
                for k in range(p):
                    bs[k] = B[combos[s, k], t]
                acc = 0.0
                for k in range(p):
                    y = 0.0
                    for l in range(k + 1):
                        y = y + Linv[s, k, l] * bs[l]
                    acc = acc + y * y
                r = tt[t] - acc
                if r < 0.0:
                    r = 0.0
                buf[s] = r
                if r < best:
                    best = r
            lim = best + tie_tol * tt[t]
            for s in range(n_s):
                if buf[s] <= lim:
                    out_idx[t] = s
                    out_res[t] = buf[s]
                    break
    return out_idx, out_res
