"""Pure-numpy twin of the compiled subset search."""
from __future__ import annotations

import numpy as np

CHUNK = 256


def subset_residuals_best(B, tt, combos, Linv, valid, tie_tol):
    n_t = B.shape[1]
    out_idx = np.empty(n_t, dtype=np.int64)
    out_res = np.empty(n_t, dtype=np.float64)
    invalid = ~np.asarray(valid, dtype=bool)
    for a in range(0, n_t, CHUNK):
        b = slice(a, min(a + CHUNK, n_t))
        bs = B[combos, b]  # (S, p, n)
        y = np.einsum("skl,sln->skn", Linv, bs)
        r = np.maximum(tt[b][None, :] - np.einsum("skn,skn->sn", y, y), 0.0)
        r[invalid] = 1e308
        lim = r.min(axis=0) + tie_tol * tt[b]
        first = np.argmax(r <= lim[None, :], axis=0)
        out_idx[b] = first
        out_res[b] = r[first, np.arange(r.shape[1])]
    return out_idx, out_res
