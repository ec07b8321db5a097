"""Sparse separation: minimize ``sum |c_i|^q`` over coefficients of the
complement set ``{u_i}``, adding normal equations as constraints one at a
time until the data are fitted to a tolerance ``delta``.

The constrained minimizations are solved with FOCUSS, the reweighted
pseudoinverse iteration ``c <- W (A W)^+ b`` with ``W = diag(|c|^(1 - q/2))``.
Solver arithmetic is float64 regardless of the grid precision.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .exceptions import (
    DegenerateInputError,
    DimensionMismatchError,
    ExhaustedError,
    GridMismatchError,
    InvalidArgumentError,
    SingularSystemError,
)
from .function_space import SampledFunction, gram_matrix, inner_products
from .oblique import remove_component

__all__ = [
    "MeasurementSet",
    "SeparationProblem",
    "SeparationState",
    "FocussResult",
    "project_data_to_W",
    "initial_uniform_coefficients",
    "normal_equation_residuals",
    "select_worst_equation",
    "focuss_minimize",
    "separate",
    "fidelity",
    "default_delta",
    "support",
    "write_solver_report",
    "write_coefficients_csv",
    "read_coefficients_csv",
]


def project_data_to_W(f_obs, B_wperp):
    """``f_obs - P_{W⊥} f_obs``."""
    if f_obs.grid != B_wperp.grid:
        raise GridMismatchError("data and basis are sampled on different grids")
    return SampledFunction(f_obs.grid, remove_component(f_obs.values[None, :], B_wperp)[0])


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Point evaluations ``m_j = f(x_j)`` at a subset of grid indices."""

    grid: object
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        if idx.ndim != 1 or idx.size == 0:
            raise InvalidArgumentError("need at least one measurement")
        if idx.min() < 0 or idx.max() >= self.grid.n_points:
            raise InvalidArgumentError("measurement points must lie on the grid")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != idx.shape:
            raise DimensionMismatchError("one value per measurement point is required")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, f, indices=None):
        idx = np.arange(f.grid.n_points) if indices is None else np.asarray(indices, dtype=int)
        return cls(f.grid, idx, f.values[idx])

    @property
    def points(self):
        return self.grid.points[self.indices]

    def evaluate(self, values):
        """Apply the functionals to sampled values (last axis is the grid)."""
        return np.asarray(values)[..., self.indices]


@dataclass(frozen=True, eq=False)
class SeparationProblem:
    """Data and settings for one sparse separation.

    ``U`` is the complement spanning set and ``f_W_obs`` the observed data
    projected onto W.  ``max_constraints`` defaults to ``len(U)``.
    """

    U: object
    f_W_obs: SampledFunction
    q: float = 0.8
    delta: float = 0.0
    max_constraints: int | None = None
    measurements: MeasurementSet | None = None

    def __post_init__(self):
        if self.U.grid != self.f_W_obs.grid:
            raise GridMismatchError("U and the data are sampled on different grids")
        if not 0 < self.q <= 1:
            raise InvalidArgumentError(f"q must lie in (0, 1], got {self.q}")
        if not self.delta >= 0:
            raise InvalidArgumentError(f"delta must be >= 0, got {self.delta}")
        M = len(self.U)
        mc = M if self.max_constraints is None else int(self.max_constraints)
        if not 1 <= mc <= M:
            raise InvalidArgumentError(f"max_constraints must lie in [1, {M}], got {mc}")
        object.__setattr__(self, "max_constraints", mc)
        if self.measurements is None:
            object.__setattr__(self, "measurements", MeasurementSet.from_function(self.f_W_obs))

    @property
    def M(self):
        return len(self.U)

    @cached_property
    def gram(self):
        return np.asarray(gram_matrix(self.U), dtype=np.float64)

    @cached_property
    def rhs(self):
        """``<u_n|f_W_obs>``."""
        return np.asarray(inner_products(self.U, self.f_W_obs), dtype=np.float64)

    @cached_property
    def sampled_U(self):
        return np.asarray(self.measurements.evaluate(self.U.values), dtype=np.float64)


def initial_uniform_coefficients(prob):
    """``C = sum_n <u_n|f> / sum_{i,n} <u_i|u_n>``."""
    G = prob.gram
    den = G.sum()
    if abs(den) < 1e-14 * max(np.abs(G).max(), np.finfo(float).tiny):
        raise DegenerateInputError("the entries of the Gram matrix sum to zero")
    return float(prob.rhs.sum() / den)


def normal_equation_residuals(prob, c):
    """``|<u_n|f> - sum_i c_i <u_n|u_i>|`` for every ``n``."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (prob.M,):
        raise DimensionMismatchError(f"need {prob.M} coefficients, got shape {c.shape}")
    return np.abs(prob.rhs - prob.gram @ c)


def select_worst_equation(residuals, already_selected=()):
    """Index of the largest unselected residual; ties go to the lowest index."""
    r = np.asarray(residuals, dtype=np.float64)
    mask = np.ones(r.size, dtype=bool)
    mask[list(already_selected)] = False
    if not mask.any():
        raise ExhaustedError("every equation has already been selected")
    candidates = np.flatnonzero(mask)
    return int(candidates[np.argmax(r[candidates])])


def _objective(c, q):
    return float(np.sum(np.abs(c) ** q))


@dataclass
class FocussResult:
    c: np.ndarray
    iterations: int
    converged: bool
    objective_history: list = field(default_factory=list)

    @property
    def objective(self):
        return self.objective_history[-1] if self.objective_history else None


def focuss_minimize(A, b, q, c_init, tol=1e-9, max_iter=500, rcond=1e-12, floor=1e-12):
    """Local minimizer of ``sum |c_i|^q`` subject to ``A c = b``.

    Iterates ``c <- W (A W)^+ b`` with ``W = diag(|c|^(1 - q/2))`` until the
    relative change drops below ``tol``.  Entries that reach zero stay zero.
    On exit entries below ``floor * max|c|`` are set to zero.  If the
    iteration cap is hit the feasible iterate with the smallest objective is
    returned and ``converged`` is ``False``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    c = np.array(c_init, dtype=np.float64)
    if A.shape != (b.size, c.size):
        raise DimensionMismatchError(f"A is {A.shape}, b has {b.size}, c has {c.size}")
    if not 0 < q <= 1:
        raise InvalidArgumentError(f"q must lie in (0, 1], got {q}")
    if not np.all(np.isfinite(c)):
        raise InvalidArgumentError("initial coefficients must be finite")

    bnorm = np.linalg.norm(b)
    history = []
    best, best_obj = None, np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        W = np.abs(c) ** (1 - q / 2)
        AW = A * W
        if not np.any(AW):
            if bnorm == 0:
                c = np.zeros_like(c)
                converged = True
                break
            raise SingularSystemError("weighted constraint matrix vanished")
        c_new = W * (np.linalg.pinv(AW, rcond=rcond) @ b)
        change = np.linalg.norm(c_new - c) / max(np.linalg.norm(c), 1e-30)
        c = c_new
        obj = _objective(c, q)
        history.append(obj)
        if obj < best_obj and np.linalg.norm(A @ c - b) <= 1e-8 * max(bnorm, 1e-30):
            best, best_obj = c, obj
        if change < tol:
            converged = True
            break
    if not converged and best is not None:
        c = best
    c = c.copy()
    cmax = np.abs(c).max() if c.size else 0.0
    c[np.abs(c) < floor * cmax] = 0.0
    return FocussResult(c, it, converged, history)


def fidelity(prob, c):
    """Plain sum of squared misfits at the measurement points."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (prob.M,):
        raise DimensionMismatchError(f"need {prob.M} coefficients, got shape {c.shape}")
    r = prob.measurements.values - c @ prob.sampled_U
    return float(r @ r)


@dataclass
class SeparationState:
    """Outcome of :func:`separate`.  ``selected`` holds 0-based indices in order."""

    c: np.ndarray
    selected: list
    residual_sq: float
    success: bool
    q: float
    delta: float
    iteration_log: list = field(default_factory=list)

    @property
    def n_constraints(self):
        return len(self.selected)

    def support(self, tol=1e-3):
        return support(self.c, tol)

    @property
    def negative_indices(self):
        return np.flatnonzero(self.c < 0)


def separate(prob, init="uniform", support_tol=1e-3):
    """Recursive constraint selection with a FOCUSS solve per round.

    Each round adds the worst-predicted normal equation and re-minimizes.
    ``init="uniform"`` restarts every round from ``c_i = C``;
    ``init="warm"`` continues from the previous round's coefficients.
    Stops once :func:`fidelity` is at most ``prob.delta`` or after
    ``prob.max_constraints`` rounds.
    """
    if init not in ("uniform", "warm"):
        raise InvalidArgumentError(f"init must be 'uniform' or 'warm', got {init!r}")
    G, rhs = prob.gram, prob.rhs
    C = initial_uniform_coefficients(prob)
    c0 = np.full(prob.M, C)
    c = c0
    selected, log = [], []
    res = fidelity(prob, c)
    while len(selected) < prob.max_constraints:
        before = res
        ell = select_worst_equation(normal_equation_residuals(prob, c), selected)
        selected.append(ell)
        out = focuss_minimize(G[selected], rhs[selected], prob.q, c0 if init == "uniform" else c)
        c = out.c
        res = fidelity(prob, c)
        log.append({
            "index": ell,
            "residual_before": before,
            "residual_after": res,
            "focuss_iterations": out.iterations,
            "focuss_converged": out.converged,
            "nonzeros": int(np.count_nonzero(c)),
        })
        if res <= prob.delta:
            break
    return SeparationState(c, selected, res, res <= prob.delta, prob.q, prob.delta, log)


def default_delta(f_obs, percent, safety=1.2, mode="relative_std"):
    """Expected noise energy ``n * (p/100)^2 * mean(f^2)``, times ``safety``.

    For ``relative_var`` noise the expectation is ``n * (p/100) * mean|f|``.
    """
    v = np.asarray(f_obs.values, dtype=np.float64)
    p = percent / 100
    if mode == "relative_var":
        return float(v.size * p * np.mean(np.abs(v)) * safety)
    return float(v.size * p**2 * np.mean(v * v) * safety)


def support(c, tol=1e-3):
    """Indices with ``|c_i| > tol * max|c|``."""
    c = np.asarray(c, dtype=np.float64)
    cmax = np.abs(c).max() if c.size else 0.0
    if cmax == 0:
        return np.array([], dtype=int)
    return np.flatnonzero(np.abs(c) > tol * cmax)


def write_solver_report(state, path, support_tol=1e-3, extra=None):
    report = {
        "q": state.q,
        "delta": state.delta,
        "success": state.success,
        "n_constraints": state.n_constraints,
        "selected": [int(i) for i in state.selected],
        "residual_sq": state.residual_sq,
        "support": [int(i) for i in state.support(support_tol)],
        "negative_coefficients": [int(i) for i in state.negative_indices],
        "rounds": state.iteration_log,
    }
    if extra:
        report.update(extra)
    Path(path).write_text(json.dumps(report, indent=2) + "\n")
    return report


def write_coefficients_csv(c, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "c_i"])
        for i, v in enumerate(np.asarray(c, dtype=np.float64)):
            w.writerow([i, f"{v:.17g}"])


def read_coefficients_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["c_i"]) for r in rows])
