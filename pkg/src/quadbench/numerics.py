"""Shared numerics: RK4 integration, finite-difference linearization, discretization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

FD_STEP = 1e-6

DynamicsFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LinearModel:
    """Discrete model ``x+ = a @ x + b @ u + v @ f_e`` on a fixed step ``dt``."""

    a: np.ndarray
    b: np.ndarray
    v: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        a, b, v = (np.asarray(m, dtype=float) for m in (self.a, self.b, self.v))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"transition matrix must be square, got {a.shape}")
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise ValueError(f"input matrix shape {b.shape} does not match state dim {a.shape[0]}")
        if v.ndim != 2 or v.shape[0] != a.shape[0]:
            raise ValueError(f"disturbance matrix shape {v.shape} does not match state dim")
        for name, m in (("a", a), ("b", b), ("v", v)):
            if not np.all(np.isfinite(m)):
                raise ValueError(f"LinearModel.{name} contains non-finite entries")
        if not self.dt > 0.0:
            raise ValueError(f"LinearModel.dt must be positive, got {self.dt}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "v", v)

    @property
    def state_dim(self) -> int:
        return self.a.shape[0]

    @property
    def input_dim(self) -> int:
        return self.b.shape[1]


def rk4_step(
    f: DynamicsFn, x: np.ndarray, u: np.ndarray, f_e: np.ndarray, dt: float
) -> np.ndarray:
    """One classical Runge-Kutta step with ``u`` and ``f_e`` held constant."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    k1 = f(x, u, f_e)
    k2 = f(x + 0.5 * dt * k1, u, f_e)
    k3 = f(x + 0.5 * dt * k2, u, f_e)
    k4 = f(x + dt * k3, u, f_e)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _fd_columns(eval_at: Callable[[np.ndarray], np.ndarray], point: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian columns of ``eval_at`` around ``point``."""
    point = np.asarray(point, dtype=float)
    cols = []
    for i in range(point.size):
        h = FD_STEP * max(1.0, abs(point[i]))
        plus = point.copy()
        minus = point.copy()
        plus[i] += h
        minus[i] -= h
        cols.append((eval_at(plus) - eval_at(minus)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def linearize(
    f: DynamicsFn,
    x0: np.ndarray,
    u0: np.ndarray,
    f_e0: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Jacobians of ``f`` with respect to state, input, and disturbance.

    Central differences with per-component steps scaled by the operating
    point magnitude.  Returns ``(a_c, b_c, v_c)``.
    """
    x0 = np.asarray(x0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    if f_e0 is None:
        f_e0 = np.zeros(3)
    f_e0 = np.asarray(f_e0, dtype=float)

    a_c = _fd_columns(lambda xs: f(xs, u0, f_e0), x0)
    b_c = _fd_columns(lambda us: f(x0, us, f_e0), u0)
    v_c = _fd_columns(lambda fs: f(x0, u0, fs), f_e0)
    return a_c, b_c, v_c


def discretize(
    a_c: np.ndarray, b_c: np.ndarray, v_c: np.ndarray, dt: float
) -> LinearModel:
    """Forward-Euler discretization of a continuous linearization."""
    a_c = np.asarray(a_c, dtype=float)
    return LinearModel(
        a=np.eye(a_c.shape[0]) + dt * a_c,
        b=dt * np.asarray(b_c, dtype=float),
        v=dt * np.asarray(v_c, dtype=float),
        dt=dt,
    )
