"""CIE 1931 colorimetry: tristimulus values, CIELAB, Delta E*ab and u'v'."""
from __future__ import annotations

import numpy as np

from .errors import DomainError, ValidationError
from .spectral import GRID, TriSet, as_matrix, as_vector

_EPS = (6.0 / 29.0) ** 3
_KAPPA = 3.0 * (6.0 / 29.0) ** 2


class CmfSet(TriSet):
    """Colour matching functions x-bar, y-bar, z-bar as a 31x3 matrix."""

    def __init__(self, matrix, names=("x_bar", "y_bar", "z_bar")):
        super().__init__(matrix, names)

    def __post_init__(self):
        super().__post_init__()
        peak = GRID.wavelengths[int(np.argmax(self.matrix[:, 1]))]
        if peak not in (550.0, 560.0):
            raise ValidationError(f"y-bar peaks at {peak:g} nm, expected 550 or 560 nm")


def xyz_of(e, r, cmf) -> np.ndarray:
    """``X^T diag(e) r`` on the relative scale (no 100/Y_n normalization).

    ``r`` may be 31xN, giving a 3xN result.
    """
    X = as_matrix(cmf)
    e = as_vector(e)
    r = as_vector(r)
    if r.ndim == 1:
        return X.T @ (e * r)
    return X.T @ (e[:, None] * r)


def white_point(e, cmf) -> np.ndarray:
    """XYZ of the perfect diffuser under ``e``."""
    w = xyz_of(e, np.ones(GRID.n), cmf)
    if np.any(w <= 0):
        raise DomainError(f"white point {w} has a nonpositive component")
    return w


def _f(t):
    return np.where(t > _EPS, np.cbrt(t), t / _KAPPA + 4.0 / 29.0)


def _f_inv(f):
    return np.where(f > 6.0 / 29.0, f**3, _KAPPA * (f - 4.0 / 29.0))


def xyz_to_lab(xyz, white) -> np.ndarray:
    """CIE 1976 L*a*b* with the linear branch below (6/29)^3.

    ``xyz`` has shape (..., 3).
    """
    xyz = np.asarray(xyz, dtype=float)
    white = np.asarray(white, dtype=float)
    if np.any(white <= 0):
        raise DomainError("white point components must be positive")
    if np.any(xyz < -1e-9):
        raise DomainError("negative tristimulus value")
    f = _f(np.maximum(xyz, 0.0) / white)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([L, a, b], axis=-1)


def lab_to_xyz(lab, white) -> np.ndarray:
    lab = np.asarray(lab, dtype=float)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    return np.stack([_f_inv(fx), _f_inv(fy), _f_inv(fz)], axis=-1) * np.asarray(white, float)


def delta_e_ab(p, q) -> np.ndarray | float:
    """Euclidean distance between Lab colours (broadcasts over leading axes)."""
    d = np.linalg.norm(np.asarray(p, float) - np.asarray(q, float), axis=-1)
    return float(d) if d.ndim == 0 else d


def uv_prime(xyz) -> np.ndarray:
    """CIE 1976 u', v' chromaticity; ``xyz`` has shape (..., 3)."""
    xyz = np.asarray(xyz, dtype=float)
    den = xyz[..., 0] + 15.0 * xyz[..., 1] + 3.0 * xyz[..., 2]
    if np.any(den <= 0):
        raise DomainError("X + 15Y + 3Z must be positive")
    return np.stack([4.0 * xyz[..., 0] / den, 9.0 * xyz[..., 1] / den], axis=-1)


def spectral_locus_uv(cmf) -> np.ndarray:
    """u'v' of each monochromatic stimulus on the grid (31x2)."""
    return uv_prime(as_matrix(cmf))


def in_convex_hull(points, hull_vertices) -> np.ndarray:
    """True where 2-D ``points`` fall inside the convex hull of ``hull_vertices``."""
    pts = np.atleast_2d(np.asarray(points, float))
    v = np.asarray(hull_vertices, float)
    # monotone chain
    order = np.lexsort((v[:, 1], v[:, 0]))
    v = v[order]

    def turn(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and turn(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower, upper = half(v), half(v[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    edges = np.roll(hull, -1, axis=0) - hull
    rel = pts[:, None, :] - hull[None, :, :]
    cross = edges[None, :, 0] * rel[..., 1] - edges[None, :, 1] * rel[..., 0]
    return np.all(cross >= -1e-12, axis=1)


__all__ = [
    "CmfSet",
    "delta_e_ab",
    "in_convex_hull",
    "lab_to_xyz",
    "spectral_locus_uv",
    "uv_prime",
    "white_point",
    "xyz_of",
    "xyz_to_lab",
]
