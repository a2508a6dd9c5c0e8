"""Linear colour correction and the Delta E*ab evaluation pipeline."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .colorimetry import delta_e_ab, white_point, xyz_of, xyz_to_lab
from .errors import DomainError, FormatError, RankError
from .spectral import as_matrix, as_vector, format_number, sensor_response

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColorSample:
    rgb: np.ndarray
    xyz_truth: np.ndarray
    id: str = ""

    def __post_init__(self):
        for name in ("rgb", "xyz_truth"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise FormatError(f"{name} must be 3 finite values")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class DeltaEStats:
    mean: float
    median: float
    p95: float
    p99: float
    max: float
    n: int

    def to_dict(self, digits: int = 12) -> dict:
        d = asdict(self)
        return {k: (v if k == "n" else float(format_number(v, digits))) for k, v in d.items()}

    def to_json(self, digits: int = 12) -> str:
        return json.dumps(self.to_dict(digits))


def summarize(errors) -> DeltaEStats:
    """Mean, median, 95/99th percentiles (linear interpolation) and max."""
    e = np.asarray(errors, dtype=float).ravel()
    if e.size == 0:
        raise DomainError("cannot summarize an empty error list")
    p50, p95, p99 = np.percentile(e, [50, 95, 99], method="linear")
    return DeltaEStats(float(e.mean()), float(p50), float(p95), float(p99), float(e.max()), int(e.size))


def _stack(samples):
    if isinstance(samples, tuple) and len(samples) == 2:
        rgb, xyz = (np.asarray(a, float) for a in samples)
    else:
        rgb = np.array([s.rgb for s in samples], dtype=float)
        xyz = np.array([s.xyz_truth for s in samples], dtype=float)
    return rgb, xyz


def correct_fit(samples) -> np.ndarray:
    """Least-squares 3x3 M with ``rgb @ M ~ xyz``.

    ``samples`` is a list of :class:`ColorSample` or a pair of Nx3 arrays
    ``(rgb, xyz)``.
    """
    rgb, xyz = _stack(samples)
    if rgb.ndim != 2 or rgb.shape[1] != 3 or rgb.shape != xyz.shape:
        raise FormatError("rgb and xyz must both be Nx3")
    if rgb.shape[0] < 3:
        raise RankError(f"need at least 3 samples, got {rgb.shape[0]}")
    s = np.linalg.svd(rgb, compute_uv=False)
    if s[0] == 0 or s[-1] <= s[0] * 1e-12:
        raise RankError("camera responses do not span three dimensions")
    return np.linalg.lstsq(rgb, xyz, rcond=None)[0]


def white_balance(rgbs, white_rgb) -> np.ndarray:
    """Divide each response by the white chart response, channel by channel."""
    w = np.asarray(white_rgb, dtype=float)
    if w.shape != (3,) or np.any(w <= 0):
        raise DomainError(f"white response must be 3 positive values, got {w}")
    return np.asarray(rgbs, dtype=float) / w


_balance = white_balance


@dataclass
class Evaluation:
    stats: DeltaEStats
    delta_e: np.ndarray
    M: np.ndarray
    rgb: np.ndarray
    xyz_truth: np.ndarray


def evaluate_samples(
    Q,
    e_measure,
    e_capture,
    reflectances,
    cmf,
    white_balance: bool = False,
    train: Optional[Sequence[int]] = None,
) -> Evaluation:
    """Full pipeline with per-sample detail.

    Responses are taken under ``e_capture`` and regressed onto XYZ under
    ``e_measure``; both are converted to Lab against the diffuser white of
    ``e_measure``. By default M is fit on all samples and scored on the same
    samples; ``train`` restricts the fit to a subset of columns. With fewer
    than three training samples M is the minimum-norm least-squares fit.
    """
    R = as_matrix(reflectances) if np.ndim(reflectances) == 2 else as_vector(reflectances)[:, None]
    if R.shape[1] == 0:
        raise DomainError("no reflectances to evaluate")
    X = as_matrix(cmf)
    rgb = sensor_response(Q, e_capture, R).T
    truth = xyz_of(e_measure, R, X).T
    if white_balance:
        rgb = _balance(rgb, sensor_response(Q, e_capture, np.ones(R.shape[0])))
    idx = np.arange(R.shape[1]) if train is None else np.asarray(train, dtype=int)
    if idx.size < 3:
        # too few samples to pin down M; the minimum-norm fit reproduces them exactly
        log.info("only %d training samples; using the minimum-norm correction", idx.size)
        M = np.linalg.lstsq(rgb[idx], truth[idx], rcond=None)[0]
    else:
        M = correct_fit((rgb[idx], truth[idx]))
    white = white_point(e_measure, X)
    pred_lab = xyz_to_lab(np.maximum(rgb @ M, 0.0), white)
    de = delta_e_ab(pred_lab, xyz_to_lab(truth, white))
    de = np.atleast_1d(np.asarray(de, dtype=float))
    return Evaluation(summarize(de), de, M, rgb, truth)


def evaluate(Q, e_measure, e_capture, reflectances, cmf, white_balance: bool = False, train=None) -> DeltaEStats:
    return evaluate_samples(Q, e_measure, e_capture, reflectances, cmf, white_balance, train).stats


__all__ = [
    "ColorSample",
    "DeltaEStats",
    "Evaluation",
    "correct_fit",
    "evaluate",
    "evaluate_samples",
    "summarize",
    "white_balance",
]
