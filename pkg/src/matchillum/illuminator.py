"""Multi-channel LED illuminator model.

A characterization holds the measured SPD of every channel at every drive
level, ``spectra[:, i, j]`` for channel ``i`` at level ``levels[j]``. Levels
run from 0 to 1; the zero level emits nothing. Between measured levels the
*shape* (SPD divided by drive) is interpolated linearly and the emitted
power is the drive times that shape, so measured spectra are reproduced
exactly at the knots.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .bvls import bvls
from .colorimetry import uv_prime
from .errors import DomainError, FormatError, InfeasibleError, NonConvergenceError, ValidationError
from .spectral import GRID, WAVELENGTHS, as_matrix, as_vector, load_spectral_csv, write_spectral_csv

MODES = ("simple", "complex")
MANIFEST_FORMAT = "matchillum-illuminator/1"


@dataclass(frozen=True)
class IlluminatorModel:
    spectra: np.ndarray
    levels: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        A = np.array(self.spectra, dtype=float)
        w = np.array(self.levels, dtype=float)
        if A.ndim != 3 or A.shape[0] != GRID.n:
            raise FormatError(f"spectra must be {GRID.n} x channels x levels, got {A.shape}")
        k, L = A.shape[1:]
        names = tuple(self.names) or tuple(f"ch{i + 1}" for i in range(k))
        if len(names) != k:
            raise FormatError(f"{len(names)} channel names for {k} channels")
        problems = []
        if w.shape != (L,) or L < 2:
            problems.append(f"level vector has shape {w.shape}, expected ({L},) with L >= 2")
        else:
            if np.any(np.diff(w) <= 0):
                problems.append("levels are not strictly increasing")
            if w[0] != 0.0 or w[-1] != 1.0:
                problems.append("levels must start at 0 and end at 1")
        if not np.all(np.isfinite(A)):
            problems.append("non-finite spectral values")
        for i in range(k):
            if A[:, i, :].min() < 0:
                problems.append(f"channel {names[i]}: negative spectral values")
            if np.any(A[:, i, 0] != 0.0):
                problems.append(f"channel {names[i]}: zero drive level emits light")
            power = A[:, i, :].sum(axis=0)
            drops = np.flatnonzero(np.diff(power) < 0)
            for j in drops:
                problems.append(
                    f"channel {names[i]}: total power drops from level {j} to level {j + 1}"
                )
            if power[-1] <= 0:
                problems.append(f"channel {names[i]}: no output at full drive")
        if problems:
            raise ValidationError(problems)
        A.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "spectra", A)
        object.__setattr__(self, "levels", w)
        object.__setattr__(self, "names", names)

    @property
    def k(self) -> int:
        return self.spectra.shape[1]

    @property
    def n_levels(self) -> int:
        return self.spectra.shape[2]

    @cached_property
    def normalized(self) -> np.ndarray:
        """Each measured SPD divided by its drive level.

        The zero level has no defined shape; it borrows the lowest nonzero one.
        """
        An = np.empty_like(self.spectra)
        An[:, :, 1:] = self.spectra[:, :, 1:] / self.levels[1:]
        An[:, :, 0] = An[:, :, 1]
        An.setflags(write=False)
        return An


def max_basis(model: IlluminatorModel) -> np.ndarray:
    """31 x k matrix of the channels at full drive."""
    return model.spectra[:, :, -1].copy()


def _shape(model: IlluminatorModel, i: int, c: float) -> np.ndarray:
    w = model.levels
    An = model.normalized
    if c <= w[0]:
        return An[:, i, 0]
    if c >= 1.0:
        return An[:, i, -1]
    j = int(np.searchsorted(w, c, side="right"))
    a = (c - w[j - 1]) / (w[j] - w[j - 1])
    return (1.0 - a) * An[:, i, j - 1] + a * An[:, i, j]


def _check_weight(c):
    if not (0.0 <= c <= 1.0):
        raise DomainError(f"drive level {c!r} outside [0, 1]")


def spectrum_at(model: IlluminatorModel, channel: int, c: float) -> np.ndarray:
    """SPD emitted by ``channel`` at drive ``c``."""
    c = float(c)
    _check_weight(c)
    if c >= 1.0:
        return model.spectra[:, channel, -1].copy()
    return c * _shape(model, channel, c)


def shapes_at(model: IlluminatorModel, c) -> np.ndarray:
    """Per-channel normalized shapes at drives ``c`` (31 x k)."""
    c = np.asarray(c, dtype=float)
    for ci in c:
        _check_weight(ci)
    return np.column_stack([_shape(model, i, ci) for i, ci in enumerate(c)])


def render(model: IlluminatorModel, c, mode: str = "simple") -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape != (model.k,):
        raise FormatError(f"expected {model.k} weights, got shape {c.shape}")
    if mode == "simple":
        if np.any(c < 0) or np.any(c > 1):
            raise DomainError("channel weights must lie in [0, 1]")
        return max_basis(model) @ c
    if mode == "complex":
        return sum(spectrum_at(model, i, ci) for i, ci in enumerate(c))
    raise FormatError(f"unknown mode {mode!r}; expected one of {MODES}")


# -- metamers ----------------------------------------------------------------


class Metamer(NamedTuple):
    weights: np.ndarray
    scale: float
    light: np.ndarray
    xyz_residual: float


def _equality_polish(B, t, E, f, c):
    """Re-solve on the support of ``c`` with ``E c = f`` imposed exactly."""
    F = np.flatnonzero(c > 0)
    if F.size < E.shape[0]:
        return c
    BF, EF = B[:, F], E[:, F]
    n, p = F.size, E.shape[0]
    K = np.zeros((n + p, n + p))
    K[:n, :n] = BF.T @ BF
    K[:n, n:] = EF.T
    K[n:, :n] = EF
    rhs = np.concatenate([BF.T @ t, f])
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0][:n]
    if np.any(sol < 0):
        return c
    out = np.zeros_like(c)
    out[F] = sol
    if np.linalg.norm(E @ out - f) <= np.linalg.norm(E @ c - f):
        return out
    return c


def _metamer_linear(B, t, X, weight):
    """Least spectral error nonnegative weights whose XYZ match ``t``'s."""
    E = X.T @ B
    f = X.T @ t
    tn = np.linalg.norm(t)
    fn = np.linalg.norm(f)
    G = np.vstack([B / tn, weight * E / fn])
    d = np.concatenate([t / tn, weight * f / fn])
    c = bvls(G, d, 0.0, np.inf)
    return _equality_polish(B, t, E, f, c)


def _gamut_diagnostic(model, target, X):
    B = max_basis(model)
    return {
        "target_uv": uv_prime(X.T @ target).tolist(),
        "channel_uv": {n: uv_prime(X.T @ B[:, i]).tolist() for i, n in enumerate(model.names)},
    }


def solve_metamer(
    model: IlluminatorModel,
    target,
    cmf,
    mode: str = "simple",
    weight: float = 1e4,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> Metamer:
    """Find the illuminator setting whose XYZ matches ``target``.

    Among all nonnegative settings with the same XYZ as ``target`` (up to a
    common scale) this picks the one with the smallest spectral error. The
    target is reproduced at its own scale when every weight fits under 1;
    otherwise the whole light is dimmed (``scale < 1``) until it does.
    """
    t = as_vector(target).astype(float)
    X = as_matrix(cmf)
    if np.any(t < 0):
        raise DomainError("target spectrum has negative values")
    if not np.any(t > 0):
        raise DomainError("target spectrum is identically zero")
    if mode not in MODES:
        raise FormatError(f"unknown mode {mode!r}")

    if mode == "simple":
        raw = _metamer_linear(max_basis(model), t, X, weight)
        scale = min(1.0, 1.0 / raw.max()) if raw.max() > 0 else 1.0
        c = np.minimum(raw * scale, 1.0)
    else:
        c = np.ones(model.k)
        light = render(model, c, mode)
        for _ in range(max_iter):
            raw = _metamer_linear(shapes_at(model, c), t, X, weight)
            scale = min(1.0, 1.0 / raw.max()) if raw.max() > 0 else 1.0
            c = np.minimum(raw * scale, 1.0)
            # identical channels may trade weight between passes; compare lights
            prev, light = light, render(model, c, mode)
            if np.linalg.norm(light - prev) <= 1e-12 * np.linalg.norm(light):
                break
        else:
            raise NonConvergenceError("complex metamer iteration did not settle", best=c)

    light = render(model, c, mode)
    want = scale * (X.T @ t)
    resid = float(np.linalg.norm(X.T @ light - want) / np.linalg.norm(want))
    if resid > tol:
        raise InfeasibleError(
            f"no illuminator setting reproduces the target XYZ (relative residual {resid:.3g})",
            _gamut_diagnostic(model, t, X),
        )
    return Metamer(c, float(scale), light, resid)


# -- characterization --------------------------------------------------------


def peak_wavelength(spd) -> float:
    """Peak position refined by a parabola through the log of the 3 top samples.

    Exact for Gaussian bands; falls back to the raw argmax at the grid edges.
    """
    v = as_vector(spd)
    i = int(np.argmax(v))
    if 0 < i < v.size - 1 and np.all(v[i - 1 : i + 2] > 0):
        la, lb, lc = np.log(v[i - 1 : i + 2])
        den = la - 2 * lb + lc
        if den < 0:
            return float(WAVELENGTHS[i] + 0.5 * (la - lc) / den * GRID.step_nm)
    return float(WAVELENGTHS[i])


@dataclass
class ChannelSummary:
    name: str
    peak_full_nm: float
    peak_low_nm: float
    peak_shift_nm: float
    uv: np.ndarray = field(repr=False)  # levels 1..L-1 x 2
    uv_drift: float = 0.0


def characterize(model: IlluminatorModel, cmf) -> list[ChannelSummary]:
    """Peak-shift and u'v' drift per channel over the nonzero drive levels."""
    X = as_matrix(cmf)
    out = []
    for i, name in enumerate(model.names):
        spds = model.spectra[:, i, 1:]
        peaks = [peak_wavelength(spds[:, j]) for j in range(spds.shape[1])]
        uv = uv_prime((X.T @ spds).T)
        drift = float(np.max(np.linalg.norm(uv[:, None, :] - uv[None, :, :], axis=-1)))
        out.append(
            ChannelSummary(name, peaks[-1], peaks[0], peaks[0] - peaks[-1], uv, drift)
        )
    return out


@dataclass(frozen=True)
class LedSpec:
    center_nm: float
    fwhm_nm: float
    peak: float
    shift_weight: float = 0.0  # fraction of the global shift applied to this LED


# 8 narrow bands from violet to deep red with nothing in 525-615 nm, plus two
# identical phosphor-type broad bands covering that gap. The green and cyan
# LEDs drift toward longer wavelengths as they are dimmed.
DEFAULT_LEDS = (
    LedSpec(415, 20, 0.5),
    LedSpec(440, 22, 0.9),
    LedSpec(465, 24, 1.0),
    LedSpec(490, 28, 0.7, 0.5),
    LedSpec(520, 32, 0.6, 1.0),
    LedSpec(625, 20, 0.9),
    LedSpec(655, 22, 0.8),
    LedSpec(690, 24, 0.5),
    LedSpec(570, 100, 0.8),
    LedSpec(570, 100, 0.8),
)
DEFAULT_LEVELS = np.round(np.linspace(0.0, 1.0, 11), 12)


def _gauss(center, fwhm):
    sigma = fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    return np.exp(-0.5 * ((WAVELENGTHS - center) / sigma) ** 2)


def synthetic_illuminator(
    leds: Sequence[LedSpec] = DEFAULT_LEDS,
    levels=DEFAULT_LEVELS,
    shift_nm: float = 17.0,
    noise: float = 0.0,
    seed: int | None = 0,
) -> IlluminatorModel:
    """Gaussian-LED stand-in for a measured characterization.

    A channel with ``shift_weight`` s peaks ``s * shift_nm`` further to the
    red at the lowest nonzero level than at full drive, moving linearly in
    between. ``noise`` adds Gaussian noise relative to each channel's peak.
    """
    w = np.asarray(levels, dtype=float)
    if w.size < 2:
        raise FormatError("need at least two levels")
    w_low = w[1]
    rng = np.random.default_rng(seed)
    A = np.zeros((GRID.n, len(leds), w.size))
    for i, led in enumerate(leds):
        for j in range(1, w.size):
            frac = (1.0 - w[j]) / (1.0 - w_low) if w_low < 1 else 0.0
            center = led.center_nm + led.shift_weight * shift_nm * frac
            A[:, i, j] = w[j] * led.peak * _gauss(center, led.fwhm_nm)
        if noise > 0:
            A[:, i, 1:] += noise * led.peak * rng.standard_normal((GRID.n, w.size - 1))
            A[:, i, 1:] = np.maximum(A[:, i, 1:], 0.0)
    return IlluminatorModel(A, w)


# -- manifest I/O ------------------------------------------------------------


def _level_column(name, j):
    return f"{name}_L{j:02d}"


def save_manifest(model: IlluminatorModel, path, digits: int = 12) -> Path:
    """Write ``<path>`` (JSON) and a sibling spectral CSV holding every SPD."""
    path = Path(path)
    csv_path = path.with_suffix(".csv")
    cols, data, channels = [], [], []
    for i, name in enumerate(model.names):
        refs = []
        for j in range(model.n_levels):
            col = _level_column(name, j)
            refs.append(col)
            cols.append(col)
            data.append(model.spectra[:, i, j])
        channels.append({"name": name, "columns": refs})
    write_spectral_csv(csv_path, cols, np.column_stack(data), digits=digits)
    manifest = {
        "format": MANIFEST_FORMAT,
        "k": model.k,
        "L": model.n_levels,
        "levels": [float(f"{x:.{digits}g}") for x in model.levels],
        "spectra_csv": csv_path.name,
        "channels": channels,
    }
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def load_manifest(path) -> IlluminatorModel:
    path = Path(path)
    try:
        m = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    problems = []
    for key in ("k", "L", "levels", "spectra_csv", "channels"):
        if key not in m:
            problems.append(f"manifest missing {key!r}")
    if problems:
        raise ValidationError(problems)
    if len(m["channels"]) != m["k"]:
        problems.append(f"k={m['k']} but {len(m['channels'])} channels listed")
    if len(m["levels"]) != m["L"]:
        problems.append(f"L={m['L']} but {len(m['levels'])} levels listed")
    for ch in m["channels"]:
        if len(ch.get("columns", [])) != m["L"]:
            problems.append(f"channel {ch.get('name')!r}: expected {m['L']} level columns")
    if problems:
        raise ValidationError(problems)
    names, spectra = load_spectral_csv(path.parent / m["spectra_csv"])
    lookup = {n: spectra[:, idx] for idx, n in enumerate(names)}
    A = np.zeros((GRID.n, m["k"], m["L"]))
    for i, ch in enumerate(m["channels"]):
        for j, col in enumerate(ch["columns"]):
            if col not in lookup:
                problems.append(f"channel {ch['name']!r}: column {col!r} not in spectra CSV")
            else:
                A[:, i, j] = lookup[col]
    if problems:
        raise ValidationError(problems)
    return IlluminatorModel(A, m["levels"], tuple(ch["name"] for ch in m["channels"]))


__all__ = [
    "DEFAULT_LEDS",
    "DEFAULT_LEVELS",
    "IlluminatorModel",
    "LedSpec",
    "MODES",
    "Metamer",
    "characterize",
    "load_manifest",
    "max_basis",
    "peak_wavelength",
    "render",
    "save_manifest",
    "shapes_at",
    "solve_metamer",
    "spectrum_at",
    "synthetic_illuminator",
]
