"""Bounded-variable least squares by an active-set method (Stark & Parker).

Solves ``min ||G c - d||^2`` subject to ``lo <= c <= hi``. Intended for the
small dense problems that show up here (tens of columns at most); every
inner step is an exact least-squares solve on the current free set, so the
result is exact at termination.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, FormatError, NonConvergenceError


def _bounds(b, k, default):
    b = np.full(k, default, dtype=float) if b is None else np.asarray(b, dtype=float)
    if b.ndim == 0:
        b = np.full(k, float(b))
    if b.shape != (k,):
        raise FormatError(f"bound vector has shape {b.shape}, expected ({k},)")
    return b.copy()


def _slack(b):
    out = np.zeros_like(b)
    fin = np.isfinite(b)
    out[fin] = 1e-15 * np.maximum(1.0, np.abs(b[fin]))
    return out


def kkt_violation(G, d, c, lo=None, hi=None) -> float:
    """Largest violation of the box-constrained KKT conditions at ``c``.

    Interior coordinates need a zero gradient, coordinates at ``lo`` a
    nonnegative one, coordinates at ``hi`` a nonpositive one.
    """
    G = np.asarray(G, float)
    c = np.asarray(c, float)
    k = G.shape[1]
    lo = _bounds(lo, k, -np.inf)
    hi = _bounds(hi, k, np.inf)
    grad = G.T @ (G @ c - np.asarray(d, float))
    at_lo = c <= lo
    at_hi = c >= hi
    v = np.abs(grad)
    v[at_lo] = np.maximum(-grad[at_lo], 0.0)
    v[at_hi] = np.maximum(grad[at_hi], 0.0)
    v[at_lo & at_hi] = 0.0
    return float(v.max(initial=0.0))


def bvls(G, d, lo=None, hi=None, max_iter: int | None = None) -> np.ndarray:
    """Bounded-variable least squares.

    ``lo``/``hi`` may be scalars, vectors or ``None`` (unbounded); infinite
    bounds are allowed. Columns of ``G`` that are identically zero have no
    influence on the fit and are pinned to their lower bound (or upper bound,
    or zero, when the lower bound is infinite).
    """
    G = np.asarray(G, dtype=float)
    d = np.asarray(d, dtype=float)
    if G.ndim != 2 or d.shape != (G.shape[0],):
        raise FormatError(f"G {G.shape} and d {d.shape} are incompatible")
    m, k = G.shape
    if m < 1:
        raise FormatError("need at least one equation")
    lo = _bounds(lo, k, -np.inf)
    hi = _bounds(hi, k, np.inf)
    if np.any(lo > hi):
        raise DomainError("lower bound exceeds upper bound")
    if max_iter is None:
        max_iter = 20 * k + 100

    x = np.zeros(k)
    free = np.zeros(k, dtype=bool)
    dead = ~np.any(G != 0.0, axis=0)
    for i in range(k):
        if np.isfinite(lo[i]):
            x[i] = lo[i]
        elif np.isfinite(hi[i]):
            x[i] = hi[i]
        else:
            x[i] = 0.0
            free[i] = not dead[i]
    gnorm = np.linalg.norm(G)

    def solve_free(blocked_j=None):
        """Run the inner loop; returns False if ``blocked_j`` moved the wrong way."""
        first = True
        while np.any(free):
            F = np.flatnonzero(free)
            rhs = d - G[:, ~free] @ x[~free]
            z = np.linalg.lstsq(G[:, F], rhs, rcond=None)[0]
            if first and blocked_j is not None:
                pos = np.searchsorted(F, blocked_j)
                zj = z[pos]
                if (x[blocked_j] <= lo[blocked_j] and zj <= lo[blocked_j]) or (
                    x[blocked_j] >= hi[blocked_j] and zj >= hi[blocked_j]
                ):
                    free[blocked_j] = False
                    return False
            first = False
            bad = (z <= lo[F]) | (z >= hi[F])
            if not np.any(bad):
                x[F] = z
                return True
            xF = x[F]
            step = np.ones_like(z)
            below = bad & (z <= lo[F])
            above = bad & (z >= hi[F])
            with np.errstate(divide="ignore", invalid="ignore"):
                step[below] = (xF[below] - lo[F][below]) / (xF[below] - z[below])
                step[above] = (hi[F][above] - xF[above]) / (z[above] - xF[above])
            step = np.nan_to_num(step, nan=0.0)
            alpha = float(np.clip(step[bad].min(), 0.0, 1.0))
            xF = xF + alpha * (z - xF)
            hit_lo = xF <= lo[F] + _slack(lo[F])
            hit_hi = xF >= hi[F] - _slack(hi[F])
            # whichever coordinate set alpha must leave the free set
            hit_lo |= below & (step <= alpha)
            hit_hi |= above & (step <= alpha)
            xF[hit_lo] = lo[F][hit_lo]
            xF[hit_hi] = hi[F][hit_hi]
            x[F] = xF
            free[F[hit_lo | hit_hi]] = False
        return True

    solve_free()
    blocked = np.zeros(k, dtype=bool)
    for _ in range(max_iter):
        w = G.T @ (d - G @ x)
        tol = 1e-13 * gnorm * (np.linalg.norm(d) + np.linalg.norm(G @ x)) + 1e-300
        cand = ~free & ~dead & ~blocked & (
            ((x <= lo) & (w > tol)) | ((x >= hi) & (w < -tol))
        )
        if not np.any(cand):
            return x
        score = np.where(cand, np.abs(w), -1.0)
        # near-ties (e.g. duplicated channels) go to the lowest index
        j = int(np.flatnonzero(score >= score.max() * (1.0 - 1e-9))[0])
        free[j] = True
        before = x.copy()
        if solve_free(blocked_j=j):
            blocked[:] = False
        else:
            blocked[j] = True
        if np.array_equal(before, x) and not blocked[j]:
            blocked[j] = True
    raise NonConvergenceError(f"bvls did not converge in {max_iter} iterations", best=x.copy())


__all__ = ["bvls", "kkt_violation"]
