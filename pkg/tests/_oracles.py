"""Independent brute-force oracles shared by unit and acceptance tests."""
import numpy as np


def grid_min_box(G, d, step=0.005):
    """Minimum of ||G x - d||^2 over a regular grid on [0, 1]^k (k <= 3).

    Returns ``(f_min, x_min)``. The quadratic form is expanded so that the
    innermost two axes are evaluated as one vectorized slab.
    """
    G = np.asarray(G, float)
    d = np.asarray(d, float)
    k = G.shape[1]
    H, b, dd = G.T @ G, G.T @ d, float(d @ d)
    pts = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    if k == 1:
        f = H[0, 0] * pts**2 - 2 * b[0] * pts + dd
        i = int(np.argmin(f))
        return float(f[i]), np.array([pts[i]])
    inner = np.array(np.meshgrid(pts, pts, indexing="ij")).reshape(2, -1).T
    if k == 2:
        f = np.einsum("ni,ij,nj->n", inner, H, inner) - 2 * inner @ b + dd
        i = int(np.argmin(f))
        return float(f[i]), inner[i]
    if k != 3:
        raise ValueError("grid oracle supports k <= 3")
    Hi = H[1:, 1:]
    quad = np.einsum("ni,ij,nj->n", inner, Hi, inner) - 2 * inner @ b[1:]
    cross = 2 * inner @ H[0, 1:]
    best, arg = np.inf, None
    for x0 in pts:
        f = quad + x0 * cross + H[0, 0] * x0**2 - 2 * b[0] * x0 + dd
        i = int(np.argmin(f))
        if f[i] < best:
            best, arg = float(f[i]), np.concatenate([[x0], inner[i]])
    return best, arg


def grid_tolerance(G, d, x, step):
    """Largest amount the best grid point can exceed the true box optimum.

    Rounding x to the nearest grid point moves it by at most step/2 per
    coordinate; bound the change of the quadratic along that move.
    """
    k = G.shape[1]
    h = 0.5 * step * np.sqrt(k)
    grad = 2 * G.T @ (G @ x - d)
    return float(np.linalg.norm(grad) * h + np.linalg.norm(G, 2) ** 2 * h**2) + 1e-12


def percentile_inclusive(values, p):
    """Linear interpolation between closest ranks, written out by hand."""
    v = sorted(values)
    pos = (len(v) - 1) * p / 100.0
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (v[hi] - v[lo]) * (pos - lo)


def two_channel_match_grid(b1, b2, Q, e, X, step=0.002):
    """Global optimum of the matched-illumination objective for two channels.

    For each (c1, c2) on the grid the best M is the least-squares one, so the
    objective is ``||T||^2 - tr(K^T S^-1 K)`` with ``S = A^T A`` and
    ``K = A^T T``, ``A = diag(c1 b1 + c2 b2) Q``, ``T = diag(e) X``.
    """
    T = e[:, None] * X
    P = {(a, b): Q.T @ ((u * v)[:, None] * Q) for a, u in enumerate((b1, b2)) for b, v in enumerate((b1, b2))}
    K1, K2 = Q.T @ (b1[:, None] * T), Q.T @ (b2[:, None] * T)
    pts = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    c1, c2 = (a.ravel() for a in np.meshgrid(pts, pts, indexing="ij"))
    keep = (c1 + c2) > 0
    c1, c2 = c1[keep], c2[keep]
    S = c1[:, None, None] ** 2 * P[0, 0] + 2 * (c1 * c2)[:, None, None] * P[0, 1] + c2[:, None, None] ** 2 * P[1, 1]
    K = c1[:, None, None] * K1 + c2[:, None, None] * K2
    f = float(np.sum(T * T)) - np.einsum("nij,nij->n", K, np.linalg.solve(S, K))
    i = int(np.argmin(f))
    return float(f[i]), np.array([c1[i], c2[i]])
