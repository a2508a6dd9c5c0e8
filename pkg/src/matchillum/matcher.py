"""Matched-illumination solvers.

Both solvers minimise ``||diag(B c) Q M - diag(e) X||_F^2`` over the channel
weights ``c`` (boxed to [0, 1]) and a 3x3 correction ``M`` by alternating
least squares: ``M`` in closed form, ``c`` by bounded-variable least squares.
The complex solver additionally swaps each basis column for the channel's
shape at its current drive level after every ``c`` step, so the light being
optimised is the one the illuminator actually emits.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .bvls import bvls
from .errors import InfeasibleError, NonConvergenceError, OscillationError, RankError
from .illuminator import IlluminatorModel, max_basis, render, shapes_at, solve_metamer
from .spectral import as_matrix, as_vector, format_number

log = logging.getLogger(__name__)

OSCILLATION_LIMIT = 5


@dataclass
class MatchProblem:
    e_target: np.ndarray
    Q: np.ndarray
    X: np.ndarray
    model: IlluminatorModel
    mode: str = "simple"
    c_guess: Optional[np.ndarray] = None
    tol: float = 1e-8
    max_iters: int = 200

    def __post_init__(self):
        self.e_target = as_vector(self.e_target).astype(float)
        self.Q = as_matrix(self.Q)
        self.X = as_matrix(self.X)
        if self.mode not in ("simple", "complex"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.c_guess is not None:
            self.c_guess = np.clip(np.asarray(self.c_guess, dtype=float), 0.0, 1.0)
            if self.c_guess.shape != (self.model.k,):
                raise ValueError(f"c_guess must have {self.model.k} entries")


@dataclass
class MatchResult:
    c_m: np.ndarray
    M: np.ndarray
    objective: float
    iterations: int
    trace: list = field(default_factory=list)
    mode: str = "simple"
    light: Optional[np.ndarray] = None
    converged: bool = True

    def to_dict(self, digits: int = 12) -> dict:
        num = lambda x: float(format_number(x, digits))  # noqa: E731
        return {
            "mode": self.mode,
            "weights": [num(x) for x in self.c_m],
            "M": [num(x) for x in np.asarray(self.M).ravel()],
            "objective": num(self.objective),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "trace": [num(x) for x in self.trace],
        }

    def to_json(self, digits: int = 12) -> str:
        return json.dumps(self.to_dict(digits), indent=2)


def _scaled_sensors(light, Q):
    return light[:, None] * Q


def objective(light, Q, M, e_target, X) -> float:
    """``||diag(light) Q M - diag(e) X||_F^2``."""
    R = _scaled_sensors(as_vector(light), as_matrix(Q)) @ M - as_vector(e_target)[:, None] * X
    return float(np.sum(R * R))


def fit_M(B_eff, c, Q, e_target, X) -> np.ndarray:
    """Best 3x3 correction for the light ``B_eff @ c``."""
    light = np.asarray(B_eff, float) @ np.asarray(c, float)
    A = _scaled_sensors(light, as_matrix(Q))
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0 or s[-1] <= s[0] * 1e-12:
        raise RankError("effective sensor matrix diag(Bc) Q is rank deficient", iterate=c)
    return np.linalg.lstsq(A, as_vector(e_target)[:, None] * as_matrix(X), rcond=None)[0]


def stacked_system(M, B_eff, Q, e_target, X):
    """Design matrix and target for the weight step (the objective is linear in c)."""
    QM = as_matrix(Q) @ M
    B = np.asarray(B_eff, float)
    G = (B[:, None, :] * QM[:, :, None]).reshape(-1, B.shape[1])
    d = (as_vector(e_target)[:, None] * as_matrix(X)).ravel()
    return G, d


def step_c(M, B_eff, Q, e_target, X) -> np.ndarray:
    """Optimal weights in [0, 1] for a fixed correction matrix."""
    G, d = stacked_system(M, B_eff, Q, e_target, X)
    return bvls(G, d, 0.0, 1.0)


def _change(light, M, light_prev, M_prev, Q):
    D = _scaled_sensors(light, Q) @ M - _scaled_sensors(light_prev, Q) @ M_prev
    return float(np.sum(D * D))


def _finish(p: MatchProblem, c, trace, iterations, converged) -> MatchResult:
    light = render(p.model, c, p.mode)
    B_eff = max_basis(p.model) if p.mode == "simple" else shapes_at(p.model, c)
    M = fit_M(B_eff, c, p.Q, p.e_target, p.X)
    obj = objective(light, p.Q, M, p.e_target, p.X)
    return MatchResult(c, M, obj, iterations, trace, p.mode, light, converged)


def _run_simple(p: MatchProblem, c0) -> MatchResult:
    B = max_basis(p.model)
    scale = float(np.sum((p.e_target[:, None] * p.X) ** 2)) or 1.0
    c = np.array(c0, dtype=float)
    M = np.eye(3)
    trace = []
    for it in range(1, p.max_iters + 1):
        c_prev, M_prev = c, M
        M = fit_M(B, c, p.Q, p.e_target, p.X)
        c = step_c(M, B, p.Q, p.e_target, p.X)
        trace.append(objective(B @ c, p.Q, M, p.e_target, p.X))
        if _change(B @ c, M, B @ c_prev, M_prev, p.Q) / scale < p.tol:
            return _finish(p, c, trace, it, True)
    log.info("simple matcher hit max_iters=%d", p.max_iters)
    return _finish(p, c, trace, p.max_iters, False)


def _run_complex(p: MatchProblem, c0) -> MatchResult:
    model = p.model
    scale = float(np.sum((p.e_target[:, None] * p.X) ** 2)) or 1.0
    c = np.array(c0, dtype=float)
    B = shapes_at(model, c)  # the light actually emitted at the start
    M = np.eye(3)
    trace = []
    best = None
    rises = 0
    for it in range(1, p.max_iters + 1):
        c_prev, M_prev = c, M
        M = fit_M(B, c, p.Q, p.e_target, p.X)
        c = step_c(M, B, p.Q, p.e_target, p.X)
        B = shapes_at(model, c)
        light = B @ c
        obj = objective(light, p.Q, M, p.e_target, p.X)
        rises = rises + 1 if trace and obj > trace[-1] else 0
        trace.append(obj)
        if best is None or obj < best[0]:
            best = (obj, c.copy(), it)
        if rises >= OSCILLATION_LIMIT:
            res = _finish(p, best[1], trace, it, False)
            raise OscillationError(
                f"objective rose {OSCILLATION_LIMIT} iterations running", best=res
            )
        # both lights use the updated basis, as in the stopping rule of the method
        if _change(light, M, B @ c_prev, M_prev, p.Q) / scale < p.tol:
            return _finish(p, best[1], trace, it, True)
    log.info("complex matcher hit max_iters=%d", p.max_iters)
    return _finish(p, best[1], trace, p.max_iters, False)


def _starts(p: MatchProblem):
    if p.c_guess is not None:
        return [p.c_guess]
    starts = []
    try:
        starts.append(solve_metamer(p.model, p.e_target, p.X, p.mode).weights)
    except (InfeasibleError, NonConvergenceError) as exc:
        log.info("no metamer start available (%s); using full drive only", exc)
    starts.append(np.ones(p.model.k))
    return starts


def _solve(p: MatchProblem, run) -> MatchResult:
    results = []
    last_err = None
    for c0 in _starts(p):
        try:
            results.append(run(p, c0))
        except NonConvergenceError as exc:
            last_err = exc
            if exc.best is not None:
                results.append(exc.best)
    if not results:
        raise last_err
    return min(results, key=lambda r: r.objective)


def match_simple(p: MatchProblem) -> MatchResult:
    """Alternating least squares on the full-drive basis."""
    if p.mode != "simple":
        p = replace(p, mode="simple")
    return _solve(p, _run_simple)


def match_complex(p: MatchProblem) -> MatchResult:
    """Alternating least squares with drive-dependent basis substitution.

    The objective is not guaranteed to fall monotonically once the basis
    changes, so the best iterate seen is returned. Five consecutive rises
    raise :class:`OscillationError` carrying that best iterate (when every
    start oscillates).
    """
    if p.mode != "complex":
        p = replace(p, mode="complex")
    return _solve(p, _run_complex)


def match(p: MatchProblem) -> MatchResult:
    return match_simple(p) if p.mode == "simple" else match_complex(p)


__all__ = [
    "MatchProblem",
    "MatchResult",
    "fit_M",
    "match",
    "match_complex",
    "match_simple",
    "objective",
    "stacked_system",
    "step_c",
]
