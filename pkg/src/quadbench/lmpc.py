"""Linear MPC: condense the fixed hover-linearized prediction into a box QP.

The controller predicts tracking errors over ``horizon`` steps of the
discrete linear model, holds the input after ``control_horizon`` moves
(move blocking), and optimizes in rate coordinates

    z = (u_0, u_1 - u_0, ..., u_{Nu-1} - u_{Nu-2})

so the per-step input rate limit and the absolute bounds on the applied
first move are plain box constraints.  Rotor inputs enter the prediction
and the effort penalty as deviations from the hover operating input, for
which the tracking error is an exact fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import STATUS_DEGRADED, STATUS_OK, StepResult
from .dynamics import INPUT_DIM, STATE_DIM, QuadParams, dynamics_rhs, hover_input
from .numerics import LinearModel, discretize, linearize
from .qp import BoxQP, QPSolution, solve_box_qp
from .references import ReferenceFn, reference_window

DEFAULT_HORIZON = 18
DEFAULT_CONTROL_HORIZON = 2
DEFAULT_STATE_WEIGHT = np.array([1.0] * 6 + [0.0] * 6)
DEFAULT_INPUT_WEIGHT = np.full(INPUT_DIM, 0.1)
DEFAULT_U_MIN = np.zeros(INPUT_DIM)
DEFAULT_U_MAX = np.full(INPUT_DIM, 10.0)
DEFAULT_DU_MAX = np.full(INPUT_DIM, 2.0)


@dataclass(frozen=True)
class LmpcConfig:
    """Horizon lengths, diagonal weights, and input box/rate bounds.

    ``du_max`` bounds the change between consecutive moves (and between
    the applied move and the previously applied input).
    """

    horizon: int = DEFAULT_HORIZON
    control_horizon: int = DEFAULT_CONTROL_HORIZON
    q_diag: np.ndarray = field(default_factory=lambda: DEFAULT_STATE_WEIGHT.copy())
    p_diag: np.ndarray = field(default_factory=lambda: DEFAULT_STATE_WEIGHT.copy())
    r_diag: np.ndarray = field(default_factory=lambda: DEFAULT_INPUT_WEIGHT.copy())
    u_min: np.ndarray = field(default_factory=lambda: DEFAULT_U_MIN.copy())
    u_max: np.ndarray = field(default_factory=lambda: DEFAULT_U_MAX.copy())
    du_max: np.ndarray = field(default_factory=lambda: DEFAULT_DU_MAX.copy())
    dt: float = 0.1
    qp_tol: float = 1e-8
    qp_max_iter: int = 5000

    def __post_init__(self) -> None:
        for name in ("q_diag", "p_diag", "r_diag", "u_min", "u_max", "du_max"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not (self.horizon >= self.control_horizon >= 1):
            raise ValueError(
                f"need horizon >= control_horizon >= 1, got {self.horizon}, {self.control_horizon}"
            )
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if np.any(self.q_diag < 0.0) or np.any(self.p_diag < 0.0) or np.any(self.r_diag < 0.0):
            raise ValueError("weights must be nonnegative")
        if self.q_diag.shape != self.p_diag.shape:
            raise ValueError("q_diag and p_diag must have the same length")
        m = self.r_diag.size
        if self.u_min.shape != (m,) or self.u_max.shape != (m,) or self.du_max.shape != (m,):
            raise ValueError("input bound shapes do not match r_diag")
        if np.any(self.u_min > self.u_max):
            raise ValueError("u_min > u_max on at least one component")
        if np.any(self.du_max < 0.0):
            raise ValueError("du_max must be nonnegative")

    @property
    def state_dim(self) -> int:
        return self.q_diag.size

    @property
    def input_dim(self) -> int:
        return self.r_diag.size


def move_chain(control_horizon: int, m: int) -> np.ndarray:
    """Map from rate coordinates to stacked raw moves.

    Lower block-triangular of identities: move j is the first decision
    plus the sum of the first j rate increments.
    """
    s = np.zeros((control_horizon * m, control_horizon * m))
    eye = np.eye(m)
    for i in range(control_horizon):
        for j in range(i + 1):
            s[i * m : (i + 1) * m, j * m : (j + 1) * m] = eye
    return s


def rate_coordinate_bounds(
    cfg: LmpcConfig, u_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Box bounds on ``z``: absolute and rate limits on the first move,
    pure rate limits on the increments."""
    m = cfg.input_dim
    lb = np.empty(cfg.control_horizon * m)
    ub = np.empty_like(lb)
    lb[:m] = np.maximum(cfg.u_min, u_prev - cfg.du_max)
    ub[:m] = np.minimum(cfg.u_max, u_prev + cfg.du_max)
    for j in range(1, cfg.control_horizon):
        lb[j * m : (j + 1) * m] = -cfg.du_max
        ub[j * m : (j + 1) * m] = cfg.du_max
    return lb, ub


@dataclass(frozen=True)
class CondensedQP:
    """Box QP over rate coordinates plus the affine prediction maps.

    ``predicted_states(z)`` replays the linear rollout for any decision
    vector; ``objective(z)`` is the full stage-cost value including the
    decision-independent constant.
    """

    qp: BoxQP
    chain: np.ndarray
    pred_from_state: np.ndarray
    pred_from_moves: np.ndarray
    pred_from_dist: np.ndarray
    stage_weights: np.ndarray
    move_weights: np.ndarray
    ref_stack: np.ndarray
    u_op_stack: np.ndarray
    x0: np.ndarray
    f_e: np.ndarray
    constant: float
    n: int
    m: int
    horizon: int
    control_horizon: int

    def stacked_moves(self, z: np.ndarray) -> np.ndarray:
        return (self.chain @ z).reshape(self.control_horizon, self.m)

    def predicted_states(self, z: np.ndarray) -> np.ndarray:
        dev = self.chain @ z - self.u_op_stack
        flat = self.pred_from_state @ self.x0 + self.pred_from_moves @ dev + self.pred_from_dist @ self.f_e
        return flat.reshape(self.horizon, self.n)

    def predicted_errors(self, z: np.ndarray) -> np.ndarray:
        return self.predicted_states(z) - self.ref_stack.reshape(self.horizon, self.n)

    def objective(self, z: np.ndarray) -> float:
        return self.qp.objective(z) + self.constant


def condense(
    model: LinearModel,
    cfg: LmpcConfig,
    x0: np.ndarray,
    f_e: np.ndarray,
    ref_window: np.ndarray,
    u_prev: np.ndarray | None = None,
    u_op: np.ndarray | None = None,
) -> CondensedQP:
    """Stack the move-blocked prediction and fold it into a box QP.

    Stage errors 1..N-1 carry the running weight, stage N the terminal
    weight, and each move the input weight on its deviation from ``u_op``.
    ``ref_window`` must provide at least ``horizon`` reference states.
    """
    n, m = model.state_dim, model.input_dim
    if cfg.state_dim != n or cfg.input_dim != m:
        raise ValueError(
            f"config dims ({cfg.state_dim}, {cfg.input_dim}) do not match model ({n}, {m})"
        )
    horizon, n_moves = cfg.horizon, cfg.control_horizon
    x0 = np.asarray(x0, dtype=float).reshape(n)
    f_e = np.asarray(f_e, dtype=float).reshape(model.v.shape[1])
    ref_window = np.asarray(ref_window, dtype=float)
    if ref_window.ndim != 2 or ref_window.shape[0] < horizon or ref_window.shape[1] != n:
        raise ValueError(
            f"ref_window must be at least ({horizon}, {n}), got {ref_window.shape}"
        )
    u_prev = np.zeros(m) if u_prev is None else np.asarray(u_prev, dtype=float).reshape(m)
    u_op = np.zeros(m) if u_op is None else np.asarray(u_op, dtype=float).reshape(m)

    a, b, v = model.a, model.b, model.v
    pred_f = np.empty((horizon, n, n))
    pred_g = np.zeros((horizon, n, n_moves * m))
    pred_v = np.empty((horizon, n, v.shape[1]))
    cur_f = np.eye(n)
    cur_g = np.zeros((n, n_moves * m))
    cur_v = np.zeros((n, v.shape[1]))
    for j in range(horizon):
        move = min(j, n_moves - 1)
        cur_f = a @ cur_f
        cur_g = a @ cur_g
        cur_g[:, move * m : (move + 1) * m] += b
        cur_v = a @ cur_v + v
        pred_f[j], pred_g[j], pred_v[j] = cur_f, cur_g, cur_v
    pred_f = pred_f.reshape(horizon * n, n)
    pred_g = pred_g.reshape(horizon * n, n_moves * m)
    pred_v = pred_v.reshape(horizon * n, v.shape[1])

    stage_w = np.empty((horizon, n))
    stage_w[: horizon - 1] = cfg.q_diag
    stage_w[horizon - 1] = cfg.p_diag
    stage_w = stage_w.ravel()
    move_w = np.tile(cfg.r_diag, n_moves)

    chain = move_chain(n_moves, m)
    u_op_stack = np.tile(u_op, n_moves)
    ref_stack = ref_window[:horizon].ravel()

    gs = pred_g @ chain
    offset = pred_f @ x0 + pred_v @ f_e - pred_g @ u_op_stack - ref_stack
    rs = move_w[:, None] * chain
    h = 2.0 * (gs.T @ (stage_w[:, None] * gs) + chain.T @ rs)
    h = 0.5 * (h + h.T)
    g = 2.0 * (gs.T @ (stage_w * offset) - rs.T @ u_op_stack)
    constant = float(offset @ (stage_w * offset) + u_op_stack @ (move_w * u_op_stack))

    lb, ub = rate_coordinate_bounds(cfg, u_prev)
    return CondensedQP(
        qp=BoxQP(h=h, g=g, lb=lb, ub=ub),
        chain=chain,
        pred_from_state=pred_f,
        pred_from_moves=pred_g,
        pred_from_dist=pred_v,
        stage_weights=stage_w,
        move_weights=move_w,
        ref_stack=ref_stack,
        u_op_stack=u_op_stack,
        x0=x0,
        f_e=f_e,
        constant=constant,
        n=n,
        m=m,
        horizon=horizon,
        control_horizon=n_moves,
    )


def hover_model(params: QuadParams, dt: float) -> LinearModel:
    """Discrete linearization at the hover equilibrium; built once."""
    x_op = np.zeros(STATE_DIM)
    u_op = hover_input(params)

    def f(x, u, f_e):
        return dynamics_rhs(x, u, f_e, params)

    a_c, b_c, v_c = linearize(f, x_op, u_op)
    return discretize(a_c, b_c, v_c, dt)


class LmpcController:
    """Receding-horizon tracker on the fixed hover-linearized model.

    Parameters
    ----------
    params : vehicle constants.
    cfg : horizon, weights, and bounds.
    generator : reference trajectory, called for the horizon window.
    model : optional pre-built linear model (defaults to the hover one).
    """

    name = "lmpc"

    def __init__(
        self,
        params: QuadParams,
        cfg: LmpcConfig,
        generator: ReferenceFn,
        model: LinearModel | None = None,
    ) -> None:
        if cfg.state_dim != STATE_DIM or cfg.input_dim != INPUT_DIM:
            raise ValueError("LmpcController requires the 12-state / 4-input configuration")
        self.params = params
        self.cfg = cfg
        self.generator = generator
        self.model = hover_model(params, cfg.dt) if model is None else model
        self.u_op = hover_input(params)
        self._u_prev = self.u_op.copy()
        self._warm: np.ndarray | None = None

    def reset(self) -> None:
        self._u_prev = self.u_op.copy()
        self._warm = None

    def _shift_warm(self) -> np.ndarray | None:
        if self._warm is None:
            return None
        m, n_moves = self.cfg.input_dim, self.cfg.control_horizon
        moves = (move_chain(n_moves, m) @ self._warm).reshape(n_moves, m)
        shifted = np.vstack([moves[1:], moves[-1:]])
        z = np.empty(n_moves * m)
        z[:m] = shifted[0]
        for j in range(1, n_moves):
            z[j * m : (j + 1) * m] = shifted[j] - shifted[j - 1]
        return z

    def step(self, t: float, x: np.ndarray, f_e: np.ndarray) -> StepResult:
        window = reference_window(self.generator, t, self.cfg.horizon, self.cfg.dt)
        problem = condense(
            self.model, self.cfg, x, f_e, window, u_prev=self._u_prev, u_op=self.u_op
        )
        solution: QPSolution = solve_box_qp(
            problem.qp,
            tol=self.cfg.qp_tol,
            max_iter=self.cfg.qp_max_iter,
            warm_start=self._shift_warm(),
        )
        self._warm = solution.z.copy()
        u = solution.z[: self.cfg.input_dim].copy()
        self._u_prev = u.copy()
        return StepResult(
            u=u,
            iterations=solution.iterations,
            residual=solution.kkt_residual,
            cost=problem.objective(solution.z),
            status=STATUS_OK if solution.optimal else STATUS_DEGRADED,
        )
