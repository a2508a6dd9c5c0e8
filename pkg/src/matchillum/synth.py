"""Reflectances as combinations of at most four chart patches.

Each target is fit by unconstrained least squares on every 4-subset of a
19-candidate pool (18 chromatic patches plus one neutral); the subset with
the smallest relative spectral error wins. Because camera responses are
linear in reflectance, the same coefficients applied to the measured patch
responses give the response the camera would record for the fitted target.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DegenerateError, FormatError
from .spectral import as_matrix, as_vector, format_number

SUBSET_SIZE = 4
N_CANDIDATES = 19
TIE_TOL = 1e-12


@dataclass(frozen=True)
class CombinationFit:
    indices: tuple
    coeffs: np.ndarray
    rel_error: float

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx) or len(idx) > SUBSET_SIZE:
            raise FormatError(f"indices {idx} must be at most {SUBSET_SIZE} distinct values")
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (len(idx),):
            raise FormatError("one coefficient per index required")
        if self.rel_error < 0:
            raise FormatError("rel_error must be nonnegative")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coeffs", c)

    def reflectance(self, candidates) -> np.ndarray:
        C = as_matrix(candidates)
        return C[:, list(self.indices)] @ self.coeffs


@lru_cache(maxsize=8)
def _subsets(n: int, p: int) -> np.ndarray:
    return np.array(list(combinations(range(n), p)), dtype=np.int64).reshape(-1, p)


def _factor(C, combos):
    """Inverse Cholesky factors of every subset Gram matrix, plus a validity mask."""
    gram = C.T @ C
    G = gram[combos[:, :, None], combos[:, None, :]]
    p = combos.shape[1]
    Linv = np.zeros_like(G)
    valid = np.zeros(len(combos), dtype=np.uint8)
    scale = np.einsum("skk->s", G) / p
    for s in range(len(combos)):
        try:
            L = np.linalg.cholesky(G[s])
        except np.linalg.LinAlgError:
            continue
        if np.min(np.diag(L)) ** 2 <= 1e-12 * scale[s]:
            continue
        Linv[s] = np.linalg.inv(L)
        valid[s] = 1
    return np.ascontiguousarray(Linv), valid


def _refit(C, t, idx) -> CombinationFit:
    A = C[:, list(idx)]
    q, r = np.linalg.qr(A)
    coeffs = np.linalg.solve(r, q.T @ t)
    err = float(np.linalg.norm(t - A @ coeffs) / np.linalg.norm(t))
    return CombinationFit(tuple(idx), coeffs, err)


def fit_combinations(targets, candidates, size: int = SUBSET_SIZE) -> list[CombinationFit]:
    """Exhaustive best ``size``-subset fits for each column of ``targets``.

    Ties within a relative tolerance go to the lexicographically smallest
    index tuple. Subsets whose patches are linearly dependent are skipped.
    """
    C = as_matrix(candidates)
    T = as_matrix(targets) if np.ndim(targets) == 2 else as_vector(targets)[:, None]
    if not 1 <= size <= min(SUBSET_SIZE, C.shape[1]):
        raise FormatError(f"subset size must be between 1 and {min(SUBSET_SIZE, C.shape[1])}")
    tt = np.einsum("ln,ln->n", T, T)
    if np.any(tt == 0):
        raise DegenerateError(f"target {int(np.argmin(tt))} has zero norm")
    combos = _subsets(C.shape[1], size)
    Linv, valid = _factor(C, combos)
    if not valid.any():
        raise DegenerateError("no subset of candidates is linearly independent")
    B = np.ascontiguousarray(C.T @ T)
    best, _ = kernels.subset_residuals_best(
        B, np.ascontiguousarray(tt), combos, Linv, valid, TIE_TOL
    )
    return [_refit(C, T[:, n], combos[s]) for n, s in enumerate(best)]


def fit_combination(target, candidates, size: int = SUBSET_SIZE) -> CombinationFit:
    return fit_combinations(as_vector(target)[:, None], candidates, size)[0]


def synth_rgb(fit: CombinationFit, measured_rgbs) -> np.ndarray:
    """Response of the fitted reflectance, composed from the patch responses.

    ``measured_rgbs`` is Nx3 (one row per candidate).
    """
    rgbs = np.asarray(measured_rgbs, dtype=float)
    if rgbs.ndim != 2 or rgbs.shape[1] != 3:
        raise FormatError("measured responses must be Nx3")
    return fit.coeffs @ rgbs[list(fit.indices)] if fit.indices else np.zeros(3)


def macbeth_candidates(names, reflectances, neutral: str | None = None):
    """The 18 chromatic patches plus one neutral.

    The neutral defaults to the one whose mean reflectance is closest to 0.5.
    Returns ``(names, 31x19 matrix)``.
    """
    names = list(names)
    R = as_matrix(reflectances)
    if len(names) != 24 or R.shape[1] != 24:
        raise FormatError("expected the 24-patch chart in standard order")
    if neutral is None:
        j = 18 + int(np.argmin(np.abs(R[:, 18:].mean(axis=0) - 0.5)))
    elif neutral in names[18:]:
        j = names.index(neutral)
    else:
        raise FormatError(f"{neutral!r} is not one of the neutral patches {names[18:]}")
    cols = list(range(18)) + [j]
    return [names[i] for i in cols], R[:, cols]


def write_fits_csv(path, target_ids, fits, digits: int = 12) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target_id", "idx1", "idx2", "idx3", "idx4", "c1", "c2", "c3", "c4", "rel_error"])
        for tid, f in zip(target_ids, fits):
            idx = list(f.indices) + [""] * (SUBSET_SIZE - len(f.indices))
            cs = [format_number(c, digits) for c in f.coeffs] + [""] * (SUBSET_SIZE - len(f.coeffs))
            w.writerow([tid, *idx, *cs, format_number(f.rel_error, digits)])
    return path


__all__ = [
    "CombinationFit",
    "fit_combination",
    "fit_combinations",
    "macbeth_candidates",
    "synth_rgb",
    "write_fits_csv",
]
