"""Box-constrained strictly convex quadratic programs.

Minimize ``0.5 z' H z + g' z`` subject to ``lb <= z <= ub`` with a
projected-Newton active-set method: clamp the coordinates pressed against
their bounds, take a Newton step on the free subspace, and backtrack along
the projected arc.  Every iterate is feasible by construction (projection
onto a box is a clip), the objective is non-increasing, and optimality is
certified through the projected-gradient residual

    ||z - clip(z - (H z + g))||_inf <= tol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

REGULARIZATION = 1e-8
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 5000
ARMIJO_SLOPE = 0.1
BACKTRACK_FACTOR = 0.5
MIN_STEP = 1e-16

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class BoxQP:
    """Problem data; validated on construction.

    ``h`` must be symmetric (to 1e-10 relative to its largest entry) and
    bounds may contain +-inf.
    """

    h: np.ndarray
    g: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=float)
        g = np.asarray(self.g, dtype=float)
        lb = np.asarray(self.lb, dtype=float)
        ub = np.asarray(self.ub, dtype=float)
        n = g.size
        if h.shape != (n, n):
            raise ValueError(f"H shape {h.shape} does not match gradient size {n}")
        if not np.all(np.isfinite(h)) or not np.all(np.isfinite(g)):
            raise ValueError("H and g must be finite")
        scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
        if float(np.max(np.abs(h - h.T))) > 1e-10 * scale:
            raise ValueError("H is not symmetric")
        if lb.shape != (n,) or ub.shape != (n,):
            raise ValueError("bound shapes do not match the decision dimension")
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)):
            raise ValueError("bounds contain NaN")
        if np.any(lb > ub):
            raise ValueError("lb > ub on at least one component")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)

    @property
    def n(self) -> int:
        return self.g.size

    def objective(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.h @ z + self.g @ z)

    def project(self, z: np.ndarray) -> np.ndarray:
        return np.clip(z, self.lb, self.ub)


@dataclass(frozen=True)
class QPSolution:
    z: np.ndarray
    kkt_residual: float
    iterations: int
    status: str

    @property
    def optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL


def solve_box_qp(
    problem: BoxQP,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    warm_start: np.ndarray | None = None,
    callback: Callable[[np.ndarray], None] | None = None,
) -> QPSolution:
    """Projected-Newton solve with Armijo backtracking on the clipped arc.

    The Hessian is shifted by ``REGULARIZATION * I`` before solving so the
    problem is strictly convex even when the supplied ``h`` is only
    semidefinite.  Returns a feasible point regardless of status; with
    status ``optimal`` the projected-gradient residual is at most ``tol``.
    """
    n = problem.n
    h = problem.h + REGULARIZATION * np.eye(n)
    g = problem.g
    lb, ub = problem.lb, problem.ub

    z = np.clip(warm_start if warm_start is not None else np.zeros(n), lb, ub)
    f_z = float(0.5 * z @ h @ z + g @ z)
    grad = h @ z + g

    kkt = float(np.max(np.abs(z - np.clip(z - grad, lb, ub)))) if n else 0.0
    if kkt <= tol:
        return QPSolution(z=z, kkt_residual=kkt, iterations=0, status=STATUS_OPTIMAL)

    iterations = 0
    for iterations in range(1, max_iter + 1):
        clamped = ((z <= lb) & (grad > 0.0)) | ((z >= ub) & (grad < 0.0))
        free = ~clamped
        direction = np.zeros(n)
        if np.any(free):
            h_ff = h[np.ix_(free, free)]
            try:
                chol = np.linalg.cholesky(h_ff)
                d_f = -np.linalg.solve(chol.T, np.linalg.solve(chol, grad[free]))
            except np.linalg.LinAlgError:
                d_f = -grad[free] / np.diag(h_ff)
            direction[free] = d_f

        alpha = 1.0
        improved = False
        while alpha >= MIN_STEP:
            cand = np.clip(z + alpha * direction, lb, ub)
            f_cand = float(0.5 * cand @ h @ cand + g @ cand)
            if f_cand <= f_z + ARMIJO_SLOPE * float(grad @ (cand - z)):
                improved = True
                break
            alpha *= BACKTRACK_FACTOR
        if improved:
            z, f_z = cand, f_cand
            grad = h @ z + g
        if callback is not None:
            callback(z)

        kkt = float(np.max(np.abs(z - np.clip(z - grad, lb, ub))))
        if kkt <= tol:
            return QPSolution(z=z, kkt_residual=kkt, iterations=iterations, status=STATUS_OPTIMAL)
        if not improved:
            break

    return QPSolution(z=z, kkt_residual=kkt, iterations=iterations, status=STATUS_MAX_ITERATIONS)
