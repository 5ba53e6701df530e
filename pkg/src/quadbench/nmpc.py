"""Nonlinear MPC: multiple shooting plus Gauss-Newton SQP over rotor inputs.

The horizon is split into ``horizon`` RK4 intervals with free node states
linked by defect constraints.  Each SQP iteration linearizes the defects,
eliminates the node states by forward substitution, and solves a box QP in
the same rate coordinates as the linear controller, followed by a
backtracking line search on an l1 defect-penalty merit function.  Inputs
are move blocked after ``control_horizon`` moves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import STATUS_DEGRADED, STATUS_OK, StepResult
from .dynamics import (
    INPUT_DIM,
    STATE_DIM,
    QuadParams,
    SingularAttitudeError,
    dynamics_rhs,
    hover_input,
)
from .lmpc import LmpcConfig, move_chain, rate_coordinate_bounds
from .numerics import FD_STEP, rk4_step
from .qp import BoxQP, solve_box_qp
from .references import ReferenceFn, reference_window

STATUS_FAULT = "fault"


@dataclass(frozen=True)
class NmpcConfig(LmpcConfig):
    """Linear-controller configuration plus SQP tolerances."""

    max_sqp_iterations: int = 30
    step_tol: float = 1e-6
    defect_tol: float = 1e-6
    # Must dominate the defect multipliers (O(1) at these weight scales);
    # orders of magnitude more strangles the line search.
    merit_penalty: float = 10.0
    backtrack_factor: float = 0.5
    max_backtracks: int = 20

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.max_sqp_iterations < 1:
            raise ValueError("max_sqp_iterations must be >= 1")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ValueError("backtrack_factor must lie in (0, 1)")


def step_map(
    x: np.ndarray, u: np.ndarray, f_e: np.ndarray, dt: float, params: QuadParams
) -> np.ndarray:
    """One RK4 step of the rigid-body model; broadcasts over batches."""

    def f(xs, us, fs):
        return dynamics_rhs(xs, us, fs, params)

    return rk4_step(f, x, u, f_e, dt)


def step_jacobians(
    states: np.ndarray,
    inputs: np.ndarray,
    f_e: np.ndarray,
    dt: float,
    params: QuadParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference Jacobians of the step map on a stack of intervals.

    Returns ``(d_step/d_state, d_step/d_input)`` with shapes
    ``(N, n, n)`` and ``(N, n, m)``.
    """
    states = np.asarray(states, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    n_int, n = states.shape
    m = inputs.shape[1]

    hx = FD_STEP * np.maximum(1.0, np.abs(states))
    dx = np.eye(n)[None, :, :] * hx[:, :, None]
    plus = step_map(states[:, None, :] + dx, inputs[:, None, :], f_e, dt, params)
    minus = step_map(states[:, None, :] - dx, inputs[:, None, :], f_e, dt, params)
    a = np.swapaxes(plus - minus, 1, 2) / (2.0 * hx)[:, None, :]

    hu = FD_STEP * np.maximum(1.0, np.abs(inputs))
    du = np.eye(m)[None, :, :] * hu[:, :, None]
    plus = step_map(states[:, None, :], inputs[:, None, :] + du, f_e, dt, params)
    minus = step_map(states[:, None, :], inputs[:, None, :] - du, f_e, dt, params)
    b = np.swapaxes(plus - minus, 1, 2) / (2.0 * hu)[:, None, :]
    return a, b


def shoot(
    x0: np.ndarray,
    inputs: np.ndarray,
    f_e: np.ndarray,
    dt: float,
    params: QuadParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sequential RK4 rollout with per-interval step-map sensitivities.

    ``inputs`` holds one rotor vector per interval.  Returns node states
    of shape ``(N + 1, 12)`` (first row is ``x0``) and the state/input
    Jacobian stacks evaluated along the rollout.
    """
    inputs = np.asarray(inputs, dtype=float)
    n_int = inputs.shape[0]
    states = np.empty((n_int + 1, STATE_DIM))
    states[0] = np.asarray(x0, dtype=float)
    for k in range(n_int):
        states[k + 1] = step_map(states[k], inputs[k], f_e, dt, params)
    a, b = step_jacobians(states[:-1], inputs, f_e, dt, params)
    return states, a, b


class NmpcController:
    """Receding-horizon tracker on the full nonlinear model.

    Warm started from the previous solution shifted by one interval; the
    first call starts from hover inputs and the corresponding rollout.
    """

    name = "nmpc"

    def __init__(self, params: QuadParams, cfg: NmpcConfig, generator: ReferenceFn) -> None:
        if cfg.state_dim != STATE_DIM or cfg.input_dim != INPUT_DIM:
            raise ValueError("NmpcController requires the 12-state / 4-input configuration")
        self.params = params
        self.cfg = cfg
        self.generator = generator
        self.u_op = hover_input(params)
        self._chain = move_chain(cfg.control_horizon, cfg.input_dim)
        # Rows of the chain map per move: d(move_j)/dz.
        self._move_rows = [
            self._chain[j * cfg.input_dim : (j + 1) * cfg.input_dim] for j in range(cfg.control_horizon)
        ]
        self._blocks = [min(k, cfg.control_horizon - 1) for k in range(cfg.horizon)]
        self._u_prev = self.u_op.copy()
        self._warm_z: np.ndarray | None = None
        self._warm_nodes: np.ndarray | None = None

    def reset(self) -> None:
        self._u_prev = self.u_op.copy()
        self._warm_z = None
        self._warm_nodes = None

    # -- warm starting -------------------------------------------------

    def _moves_to_z(self, moves: np.ndarray) -> np.ndarray:
        m = self.cfg.input_dim
        z = np.empty(self.cfg.control_horizon * m)
        z[:m] = moves[0]
        for j in range(1, self.cfg.control_horizon):
            z[j * m : (j + 1) * m] = moves[j] - moves[j - 1]
        return z

    def _interval_inputs(self, z: np.ndarray) -> np.ndarray:
        moves = (self._chain @ z).reshape(self.cfg.control_horizon, self.cfg.input_dim)
        return moves[self._blocks]

    def _initial_guess(self, x: np.ndarray, f_e: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cfg = self.cfg
        if self._warm_z is not None and self._warm_nodes is not None:
            moves = (self._chain @ self._warm_z).reshape(cfg.control_horizon, cfg.input_dim)
            shifted = np.vstack([moves[1:], moves[-1:]])
            z = self._moves_to_z(shifted)
            nodes = np.empty_like(self._warm_nodes)
            nodes[:-1] = self._warm_nodes[1:]
            nodes[-1] = step_map(self._warm_nodes[-1], shifted[-1], f_e, cfg.dt, self.params)
            return z, nodes
        inputs = np.tile(self.u_op, (cfg.horizon, 1))
        nodes = np.empty((cfg.horizon, STATE_DIM))
        prev = np.asarray(x, dtype=float)
        for k in range(cfg.horizon):
            prev = step_map(prev, inputs[k], f_e, cfg.dt, self.params)
            nodes[k] = prev
        return self._moves_to_z(np.tile(self.u_op, (cfg.control_horizon, 1))), nodes

    # -- evaluation pieces ----------------------------------------------

    def _defects(
        self, x: np.ndarray, nodes: np.ndarray, inputs: np.ndarray, f_e: np.ndarray
    ) -> np.ndarray:
        starts = np.vstack([x[None, :], nodes[:-1]])
        return step_map(starts, inputs, f_e, self.cfg.dt, self.params) - nodes

    def _cost(self, nodes: np.ndarray, z: np.ndarray, refs: np.ndarray) -> float:
        # Right-Riemann reading of the continuous cost: running state term
        # dt * sum over stages 1..N, terminal weight on top of stage N.
        # The input term is dt-scaled but counted once per move so the
        # effort/error balance matches the linear controller.
        cfg = self.cfg
        err = nodes - refs
        running = float(np.sum((err**2) @ cfg.q_diag)) * cfg.dt
        terminal = float(err[-1] ** 2 @ cfg.p_diag)
        moves = (self._chain @ z).reshape(cfg.control_horizon, cfg.input_dim)
        effort = float(np.sum(((moves - self.u_op) ** 2) @ cfg.r_diag)) * cfg.dt
        return running + terminal + effort

    def _merit(
        self, x: np.ndarray, nodes: np.ndarray, z: np.ndarray, refs: np.ndarray, f_e: np.ndarray
    ) -> tuple[float, float]:
        defects = self._defects(x, nodes, self._interval_inputs(z), f_e)
        merit = self._cost(nodes, z, refs) + self.cfg.merit_penalty * float(np.sum(np.abs(defects)))
        return merit, float(np.max(np.abs(defects)))

    # -- main solve ------------------------------------------------------

    def step(self, t: float, x: np.ndarray, f_e: np.ndarray) -> StepResult:
        cfg = self.cfg
        x = np.asarray(x, dtype=float)
        f_e = np.asarray(f_e, dtype=float)
        refs = reference_window(self.generator, t, cfg.horizon, cfg.dt)
        lb_z, ub_z = rate_coordinate_bounds(cfg, self._u_prev)
        m = cfg.input_dim

        def fault(u_raw: np.ndarray) -> StepResult:
            u = np.clip(u_raw, lb_z[:m], ub_z[:m])
            self._u_prev = u.copy()
            self._warm_z = None
            self._warm_nodes = None
            return StepResult(u=u, iterations=0, residual=np.inf, cost=np.inf, status=STATUS_FAULT)

        try:
            z0, nodes0 = self._initial_guess(x, f_e)
        except SingularAttitudeError:
            return fault(self._u_prev)
        try:
            return self._solve(x, f_e, refs, lb_z, ub_z, z0, nodes0)
        except SingularAttitudeError:
            # Shooting left the model's domain; apply the shifted previous
            # plan's first move and flag the step.
            return fault(z0[:m])

    def _solve(
        self,
        x: np.ndarray,
        f_e: np.ndarray,
        refs: np.ndarray,
        lb_z: np.ndarray,
        ub_z: np.ndarray,
        z: np.ndarray,
        nodes: np.ndarray,
    ) -> StepResult:
        cfg = self.cfg
        n, m = STATE_DIM, cfg.input_dim
        horizon, n_moves = cfg.horizon, cfg.control_horizon
        nz = n_moves * m

        z = np.clip(z, lb_z, ub_z)

        sqrt_q = np.sqrt(cfg.q_diag * cfg.dt)
        sqrt_terminal = np.sqrt(cfg.p_diag + cfg.q_diag * cfg.dt)
        sqrt_r = np.sqrt(cfg.r_diag * cfg.dt)

        status = STATUS_OK
        merit_history: list[float] = []
        defect_norm = np.inf
        iterations = 0
        merit, defect_norm = self._merit(x, nodes, z, refs, f_e)
        merit_history.append(merit)

        for iterations in range(1, cfg.max_sqp_iterations + 1):
            inputs = self._interval_inputs(z)
            defects = self._defects(x, nodes, inputs, f_e)
            defect_norm = float(np.max(np.abs(defects)))
            a_all, b_all = step_jacobians(
                np.vstack([x[None, :], nodes[:-1]]), inputs, f_e, cfg.dt, self.params
            )

            # Forward substitution: node deltas as affine functions of dz.
            shift = np.empty((horizon, n))
            gain = np.empty((horizon, n, nz))
            shift[0] = defects[0]
            gain[0] = b_all[0] @ self._move_rows[self._blocks[0]]
            for k in range(1, horizon):
                shift[k] = defects[k] + a_all[k] @ shift[k - 1]
                gain[k] = a_all[k] @ gain[k - 1] + b_all[k] @ self._move_rows[self._blocks[k]]

            rows: list[np.ndarray] = []
            offsets: list[np.ndarray] = []
            err = nodes - refs
            for k in range(horizon - 1):
                rows.append(sqrt_q[:, None] * gain[k])
                offsets.append(sqrt_q * (err[k] + shift[k]))
            rows.append(sqrt_terminal[:, None] * gain[horizon - 1])
            offsets.append(sqrt_terminal * (err[horizon - 1] + shift[horizon - 1]))
            moves = (self._chain @ z).reshape(n_moves, m)
            for j in range(n_moves):
                rows.append(sqrt_r[:, None] * self._move_rows[j])
                offsets.append(sqrt_r * (moves[j] - self.u_op))
            jac = np.vstack(rows)
            res = np.concatenate(offsets)

            h = 2.0 * (jac.T @ jac)
            h = 0.5 * (h + h.T)
            g = 2.0 * (jac.T @ res)
            sub = BoxQP(h=h, g=g, lb=lb_z - z, ub=ub_z - z)
            qp_sol = solve_box_qp(sub, tol=cfg.qp_tol, max_iter=cfg.qp_max_iter)
            dz = qp_sol.z

            if float(np.max(np.abs(dz))) <= cfg.step_tol and defect_norm <= cfg.defect_tol:
                break

            d_nodes = shift + gain @ dz
            merit0 = self._cost(nodes, z, refs) + cfg.merit_penalty * float(np.sum(np.abs(defects)))
            alpha = 1.0
            accepted = False
            for _ in range(cfg.max_backtracks + 1):
                z_try = z + alpha * dz
                nodes_try = nodes + alpha * d_nodes
                merit_try, defect_try = self._merit(x, nodes_try, z_try, refs, f_e)
                if merit_try < merit0:
                    z, nodes = z_try, nodes_try
                    merit_history.append(merit_try)
                    defect_norm = defect_try
                    accepted = True
                    break
                alpha *= cfg.backtrack_factor
            if not accepted:
                status = STATUS_DEGRADED
                break
        else:
            status = STATUS_DEGRADED

        u = z[:m].copy()
        self._warm_z = z.copy()
        self._warm_nodes = nodes.copy()
        self._u_prev = u.copy()
        return StepResult(
            u=u,
            iterations=iterations,
            residual=defect_norm,
            cost=self._cost(nodes, z, refs),
            status=status,
            info={"merit_history": tuple(merit_history)},
        )
