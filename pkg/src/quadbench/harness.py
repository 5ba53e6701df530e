"""Closed-loop simulation, trace recording, and RMSE metrics.

One scenario couples a controller, the nonlinear model, a reference
generator, and a disturbance profile on a uniform time grid.  At every
grid instant the controller sees the true state and the true disturbance,
its input is held for one RK4 step of the model, and the row is recorded.
Traces serialize to CSV with a fixed column set; metrics follow the
root-sum-square aggregation law over per-axis RMSEs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .base import StepResult
from .baselines import BASELINE_KINDS, BaselineController, GainSet
from .dynamics import (
    ATT,
    INPUT_DIM,
    POS,
    STATE_DIM,
    QuadParams,
    SingularAttitudeError,
    dynamics_rhs,
    validate_state,
    wrap_angle,
)
from .lmpc import LmpcConfig, LmpcController
from .nmpc import NmpcConfig, NmpcController
from .numerics import rk4_step
from .references import ReferenceFn

DisturbanceFn = Callable[[float], np.ndarray]

TRACE_COLUMNS = (
    "t",
    "x",
    "y",
    "z",
    "phi",
    "theta",
    "psi",
    "vx",
    "vy",
    "vz",
    "p",
    "q",
    "r",
    "u1",
    "u2",
    "u3",
    "u4",
    "ref_x",
    "ref_y",
    "ref_z",
    "ref_psi",
    "err_x",
    "err_y",
    "err_z",
    "err_phi",
    "err_theta",
    "err_psi",
    "diag_iters",
    "diag_residual",
)

FLOAT_FORMAT = "%.9g"


def disturbance_profile(
    kind: str,
    magnitude=None,
    window: tuple[float, float] | None = None,
) -> DisturbanceFn:
    """Time-indexed external force: ``none``, ``constant``, or ``pulse``.

    A pulse applies the vector on the half-open window ``[t0, t1)``.
    """
    zero = np.zeros(3)
    if kind == "none":
        return lambda t: zero.copy()
    vector = np.asarray(magnitude, dtype=float).reshape(3).copy()
    if kind == "constant":
        return lambda t: vector.copy()
    if kind == "pulse":
        if window is None or len(window) != 2:
            raise ValueError("pulse disturbance requires a (start, stop) window")
        t0, t1 = float(window[0]), float(window[1])
        if not t1 > t0:
            raise ValueError(f"pulse window must satisfy stop > start, got {window}")
        return lambda t: vector.copy() if t0 <= t < t1 else zero.copy()
    raise ValueError(f"unknown disturbance kind {kind!r}")


@dataclass(frozen=True)
class ControllerSpec:
    """Controller kind plus its configuration object.

    ``config`` is an :class:`LmpcConfig`/:class:`NmpcConfig` for the MPC
    kinds or a gain set for the baselines; ``None`` selects defaults.
    """

    kind: str
    config: object | None = None
    u_min: np.ndarray | None = None
    u_max: np.ndarray | None = None


@dataclass(frozen=True)
class Scenario:
    params: QuadParams
    controller: ControllerSpec
    reference: ReferenceFn
    disturbance: DisturbanceFn
    dt: float = 0.1
    duration: float = 40.0
    initial_state: np.ndarray = None

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.duration < self.dt:
            raise ValueError(f"duration must be >= dt, got {self.duration}")
        state = (
            np.zeros(STATE_DIM)
            if self.initial_state is None
            else validate_state(np.asarray(self.initial_state, dtype=float))
        )
        if np.any(np.abs(state[ATT][:2]) >= np.pi / 2):
            raise ValueError("initial roll/pitch must lie strictly inside (-pi/2, pi/2)")
        object.__setattr__(self, "initial_state", state)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def build_controller(scenario: Scenario):
    """Instantiate the controller named by the scenario."""
    spec = scenario.controller
    kind = spec.kind
    if kind == "lmpc":
        cfg = spec.config if spec.config is not None else LmpcConfig(dt=scenario.dt)
        if cfg.dt != scenario.dt:
            raise ValueError(f"controller dt {cfg.dt} does not match scenario dt {scenario.dt}")
        return LmpcController(scenario.params, cfg, scenario.reference)
    if kind == "nmpc":
        cfg = spec.config if spec.config is not None else NmpcConfig(dt=scenario.dt)
        if cfg.dt != scenario.dt:
            raise ValueError(f"controller dt {cfg.dt} does not match scenario dt {scenario.dt}")
        return NmpcController(scenario.params, cfg, scenario.reference)
    if kind in BASELINE_KINDS:
        kwargs = {}
        if spec.config is not None:
            kwargs["gains"] = spec.config
        if spec.u_min is not None:
            kwargs["u_min"] = np.asarray(spec.u_min, dtype=float)
        if spec.u_max is not None:
            kwargs["u_max"] = np.asarray(spec.u_max, dtype=float)
        return BaselineController(kind, scenario.params, scenario.reference, **kwargs)
    raise ValueError(f"unknown controller kind {kind!r}")


@dataclass(frozen=True)
class SimTrace:
    """Uniform-grid closed-loop record; one row per time instant."""

    t: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    ref_pos_yaw: np.ndarray
    errors: np.ndarray
    diag_iters: np.ndarray
    diag_residual: np.ndarray
    dt: float
    fault: str | None = None

    @property
    def n_rows(self) -> int:
        return self.t.size

    def as_matrix(self) -> np.ndarray:
        return np.column_stack(
            [
                self.t,
                self.states,
                self.inputs,
                self.ref_pos_yaw,
                self.errors,
                self.diag_iters,
                self.diag_residual,
            ]
        )


def _tracking_error(state: np.ndarray, ref_state: np.ndarray) -> np.ndarray:
    err = np.empty(6)
    err[:3] = state[POS] - ref_state[POS]
    err[3:] = wrap_angle(state[ATT] - ref_state[ATT])
    return err


def run_closed_loop(scenario: Scenario, controller=None) -> SimTrace:
    """Simulate one scenario; deterministic for identical inputs.

    The controller sees the true state and the true disturbance, no
    estimator in the loop.  A controller exception or a singular-attitude
    integration failure truncates the trace at a fault row (NaN inputs)
    and stamps the fault message.
    """
    if controller is None:
        controller = build_controller(scenario)
    controller.reset()
    params = scenario.params
    dt = scenario.dt
    n_steps = scenario.n_steps

    t_grid = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1, STATE_DIM))
    inputs = np.full((n_steps + 1, INPUT_DIM), np.nan)
    refs = np.empty((n_steps + 1, 4))
    errors = np.empty((n_steps + 1, 6))
    diag_iters = np.full(n_steps + 1, np.nan)
    diag_residual = np.full(n_steps + 1, np.nan)

    def model(x, u, f_e):
        return dynamics_rhs(x, u, f_e, params)

    state = scenario.initial_state.copy()
    fault: str | None = None
    rows = 0
    for k in range(n_steps + 1):
        t = float(t_grid[k])
        ref_state = scenario.reference(t).to_state()
        states[k] = state
        refs[k] = [ref_state[0], ref_state[1], ref_state[2], ref_state[5]]
        errors[k] = _tracking_error(state, ref_state)
        rows = k + 1
        if k == n_steps:
            if n_steps > 0:
                inputs[k] = inputs[k - 1]
                diag_iters[k] = diag_iters[k - 1]
                diag_residual[k] = diag_residual[k - 1]
            break
        f_e = np.asarray(scenario.disturbance(t), dtype=float)
        try:
            result: StepResult = controller.step(t, state, f_e)
            inputs[k] = result.u
            diag_iters[k] = result.iterations
            diag_residual[k] = result.residual
            state = rk4_step(model, state, result.u, f_e, dt)
        except SingularAttitudeError as exc:
            fault = f"t={t:.6g}: {exc}"
            inputs[k] = np.nan
            diag_iters[k] = np.nan
            diag_residual[k] = np.nan
            break
        if not np.all(np.isfinite(state)):
            fault = f"t={t:.6g}: state diverged to non-finite values"
            break

    return SimTrace(
        t=t_grid[:rows],
        states=states[:rows],
        inputs=inputs[:rows],
        ref_pos_yaw=refs[:rows],
        errors=errors[:rows],
        diag_iters=diag_iters[:rows],
        diag_residual=diag_residual[:rows],
        dt=dt,
        fault=fault,
    )


@dataclass(frozen=True)
class MetricsReport:
    """Per-axis RMSEs plus root-sum-square aggregates."""

    rmse_x: float
    rmse_y: float
    rmse_z: float
    rmse_phi: float
    rmse_theta: float
    rmse_psi: float
    rmse_xyz: float
    rmse_att: float

    @classmethod
    def from_axes(cls, position: np.ndarray, attitude: np.ndarray) -> "MetricsReport":
        position = np.asarray(position, dtype=float)
        attitude = np.asarray(attitude, dtype=float)
        return cls(
            rmse_x=float(position[0]),
            rmse_y=float(position[1]),
            rmse_z=float(position[2]),
            rmse_phi=float(attitude[0]),
            rmse_theta=float(attitude[1]),
            rmse_psi=float(attitude[2]),
            rmse_xyz=float(np.sqrt(np.sum(position**2))),
            rmse_att=float(np.sqrt(np.sum(attitude**2))),
        )

    def as_dict(self) -> dict[str, float]:
        return {
            "rmse_x": self.rmse_x,
            "rmse_y": self.rmse_y,
            "rmse_z": self.rmse_z,
            "rmse_phi": self.rmse_phi,
            "rmse_theta": self.rmse_theta,
            "rmse_psi": self.rmse_psi,
            "rmse_xyz": self.rmse_xyz,
            "rmse_att": self.rmse_att,
        }


def compute_rmse(trace: SimTrace, transient_cut: float = 0.0) -> MetricsReport:
    """Per-axis RMSE over rows with ``t >= transient_cut``.

    Attitude errors are wrapped into (-pi, pi] before squaring; the
    aggregates are the root-sum-squares of the per-axis values.
    """
    if trace.n_rows == 0:
        raise ValueError("trace is empty")
    mask = trace.t >= transient_cut
    if not np.any(mask):
        raise ValueError(
            f"transient cut {transient_cut} leaves no rows (trace ends at t={trace.t[-1]})"
        )
    err = trace.errors[mask]
    pos_rmse = np.sqrt(np.mean(err[:, :3] ** 2, axis=0))
    att_err = wrap_angle(err[:, 3:])
    att_rmse = np.sqrt(np.mean(att_err**2, axis=0))
    return MetricsReport.from_axes(pos_rmse, att_rmse)


def write_trace_csv(trace: SimTrace, path) -> None:
    with open(path, "w", newline="") as handle:
        _write_trace(trace, handle)


def trace_csv_text(trace: SimTrace) -> str:
    buffer = io.StringIO()
    _write_trace(trace, buffer)
    return buffer.getvalue()


def _write_trace(trace: SimTrace, handle) -> None:
    handle.write(",".join(TRACE_COLUMNS) + "\n")
    for row in trace.as_matrix():
        handle.write(",".join(FLOAT_FORMAT % value for value in row) + "\n")


def read_trace_csv(path) -> SimTrace:
    """Rebuild a trace from CSV; fault metadata is not round-tripped."""
    with open(path, "r", newline="") as handle:
        header = handle.readline().strip().split(",")
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        data = np.loadtxt(handle, delimiter=",", ndmin=2)
    if data.shape[1] != len(TRACE_COLUMNS):
        raise ValueError(f"trace has {data.shape[1]} columns, expected {len(TRACE_COLUMNS)}")
    t = data[:, 0]
    dt = float(t[1] - t[0]) if t.size > 1 else 1.0
    return SimTrace(
        t=t,
        states=data[:, 1:13],
        inputs=data[:, 13:17],
        ref_pos_yaw=data[:, 17:21],
        errors=data[:, 21:27],
        diag_iters=data[:, 27],
        diag_residual=data[:, 28],
        dt=dt,
    )
