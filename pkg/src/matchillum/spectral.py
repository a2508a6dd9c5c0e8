"""Fixed-grid spectral algebra and ingestion of arbitrarily sampled data.

Everything in the package lives on one grid: 400-700 nm in 10 nm steps
(31 samples). Spectra are relative, unitless vectors; the 10 nm quadrature
weight is left out of every sum and absorbed by the correction matrices.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, RangeError, RankError, ValidationError

REFLECTANCE_SLACK = 0.05


@dataclass(frozen=True)
class SpectralGrid:
    start_nm: float = 400.0
    end_nm: float = 700.0
    step_nm: float = 10.0

    def __post_init__(self):
        n = (self.end_nm - self.start_nm) / self.step_nm + 1
        if abs(n - round(n)) > 1e-9 or round(n) != 31:
            raise RangeError(
                f"grid {self.start_nm:g}:{self.step_nm:g}:{self.end_nm:g} "
                "must have exactly 31 samples"
            )

    @property
    def n(self) -> int:
        return 31

    @property
    def wavelengths(self) -> np.ndarray:
        wl = self.start_nm + self.step_nm * np.arange(self.n)
        wl.setflags(write=False)
        return wl

    @classmethod
    def parse(cls, text: str) -> "SpectralGrid":
        """Parse ``start:step:end`` (e.g. ``400:10:700``)."""
        try:
            start, step, end = (float(p) for p in text.split(":"))
        except ValueError as exc:
            raise FormatError(f"bad grid spec {text!r}, want start:step:end") from exc
        return cls(start, end, step)


GRID = SpectralGrid()
WAVELENGTHS = GRID.wavelengths


class SpectrumKind(str, Enum):
    ILLUMINANT = "illuminant"
    REFLECTANCE = "reflectance"
    GENERIC = "generic"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    kind: SpectrumKind = SpectrumKind.GENERIC
    name: str = ""

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (GRID.n,):
            raise FormatError(f"spectrum must have {GRID.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FormatError("spectrum contains non-finite values")
        kind = SpectrumKind(self.kind)
        if kind is SpectrumKind.REFLECTANCE and (
            v.min() < 0 or v.max() > 1 + REFLECTANCE_SLACK
        ):
            raise RangeError(
                f"reflectance {self.name!r} outside [0, {1 + REFLECTANCE_SLACK:g}]"
            )
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "kind", kind)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return GRID.n


def as_vector(x) -> np.ndarray:
    """Return the 31-sample array behind a Spectrum or array-like."""
    v = np.asarray(x.values if isinstance(x, Spectrum) else x, dtype=float)
    if v.shape[0] != GRID.n:
        raise FormatError(f"expected {GRID.n} samples along axis 0, got {v.shape}")
    return v


@dataclass(frozen=True)
class TriSet:
    """Three spectral curves stored as a 31x3 matrix."""

    matrix: np.ndarray
    names: tuple = ("R", "G", "B")

    def __post_init__(self):
        m = _frozen(self.matrix)
        problems = []
        if m.shape != (GRID.n, 3):
            raise FormatError(f"expected a {GRID.n}x3 matrix, got {m.shape}")
        if m.min() < 0:
            problems.append("negative sensitivity values")
        for j in range(3):
            if not np.any(m[:, j] > 0):
                problems.append(f"column {self.names[j]} has no positive entry")
        if np.linalg.matrix_rank(m) < 3:
            problems.append("columns are not linearly independent")
        if problems:
            raise ValidationError(problems)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "names", tuple(self.names))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


class SensorSet(TriSet):
    """Camera RGB spectral sensitivities."""


def as_matrix(x) -> np.ndarray:
    m = np.asarray(x.matrix if isinstance(x, TriSet) else x, dtype=float)
    if m.ndim != 2 or m.shape[0] != GRID.n:
        raise FormatError(f"expected a {GRID.n}xN matrix, got {m.shape}")
    return m


# -- ingestion ---------------------------------------------------------------


def resample(raw, grid: SpectralGrid = GRID, kind=SpectrumKind.GENERIC, name="") -> Spectrum:
    """Piecewise-linear resampling of ``(wavelength, value)`` pairs onto ``grid``.

    The raw data must cover the whole grid; nothing is extrapolated.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[1] != 2:
        raise FormatError("raw data must be a sequence of (wavelength, value) pairs")
    return Spectrum(resample_columns(raw[:, 0], raw[:, 1:], grid)[:, 0], kind, name)


def resample_columns(wavelengths, values, grid: SpectralGrid = GRID) -> np.ndarray:
    """Resample every column of ``values`` (rows follow ``wavelengths``)."""
    wl = np.asarray(wavelengths, dtype=float)
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if wl.ndim != 1 or vals.shape[0] != wl.size:
        raise FormatError("wavelength and value arrays disagree in length")
    if wl.size < 2 or np.any(np.diff(wl) <= 0):
        raise FormatError("wavelengths must be strictly increasing")
    target = grid.wavelengths
    eps = 1e-9
    if wl[0] > target[0] + eps or wl[-1] < target[-1] - eps:
        raise RangeError(
            f"data span {wl[0]:g}-{wl[-1]:g} nm does not cover "
            f"{target[0]:g}-{target[-1]:g} nm"
        )
    # exact copies where the raw data already has the grid point
    idx = np.searchsorted(wl, target)
    idx = np.clip(idx, 0, wl.size - 1)
    hit = np.abs(wl[idx] - target) <= eps
    out = np.empty((target.size, vals.shape[1]))
    for j in range(vals.shape[1]):
        out[:, j] = np.interp(target, wl, vals[:, j])
    out[hit] = vals[idx[hit]]
    return out


def read_spectral_csv(path) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Read a spectral CSV: ``wavelength_nm,<name1>,...`` then one row per wavelength."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[0] != "wavelength_nm" or len(header) < 2:
        raise FormatError(f"{path}: header must start with 'wavelength_nm' and name >=1 column")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric cell ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise FormatError(f"{path}: ragged rows")
    return data[:, 0], header[1:], data[:, 1:]


def load_spectral_csv(path, grid: SpectralGrid = GRID, columns: Sequence[str] | None = None):
    """Read a spectral CSV and resample it; returns ``(names, 31xN matrix)``."""
    wl, names, vals = read_spectral_csv(path)
    if columns is not None:
        missing = [c for c in columns if c not in names]
        if missing:
            raise FormatError(f"{path}: missing columns {missing}")
        sel = [names.index(c) for c in columns]
        names, vals = list(columns), vals[:, sel]
    return names, resample_columns(wl, vals, grid)


def format_number(x: float, digits: int = 12) -> str:
    return f"{float(x):.{digits}g}"


def write_spectral_csv(path, names: Iterable[str], matrix, wavelengths=None, digits: int = 12):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    wl = WAVELENGTHS if wavelengths is None else np.asarray(wavelengths, dtype=float)
    names = list(names)
    if matrix.shape != (wl.size, len(names)):
        raise FormatError(f"matrix shape {matrix.shape} does not match {wl.size}x{len(names)}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["wavelength_nm", *names])
        for lam, row in zip(wl, matrix):
            w.writerow([format_number(lam), *(format_number(v, digits) for v in row)])


# -- algebra -----------------------------------------------------------------


def diag_mul(a, b) -> Spectrum:
    """Per-wavelength product, e.g. a light modulated by a filter."""
    return Spectrum(as_vector(a) * as_vector(b), SpectrumKind.GENERIC)


def sensor_response(Q, e, r) -> np.ndarray:
    """``rho = Q^T diag(e) r``.

    ``r`` may be a single spectrum or a 31xN matrix of reflectances, in which
    case the result is 3xN. No normalization is applied.
    """
    Q = as_matrix(Q)
    e = as_vector(e)
    r = as_vector(r)
    if r.ndim == 1:
        return Q.T @ (e * r)
    return Q.T @ (e[:, None] * r)


def luther_residual(Q, X) -> tuple[np.ndarray, float]:
    """Least-squares ``M`` with ``Q M ~ X`` and the Frobenius residual.

    The residual is zero exactly when the Luther condition holds.
    """
    Q = as_matrix(Q)
    X = as_matrix(X)
    s = np.linalg.svd(Q, compute_uv=False)
    if s[-1] <= s[0] * 1e-13:
        raise RankError("Q^T Q is singular")
    M = np.linalg.lstsq(Q, X, rcond=None)[0]
    return M, float(np.linalg.norm(Q @ M - X))


__all__ = [
    "GRID",
    "WAVELENGTHS",
    "SensorSet",
    "SpectralGrid",
    "Spectrum",
    "SpectrumKind",
    "TriSet",
    "as_matrix",
    "as_vector",
    "diag_mul",
    "format_number",
    "load_spectral_csv",
    "luther_residual",
    "read_spectral_csv",
    "resample",
    "resample_columns",
    "sensor_response",
    "write_spectral_csv",
]
