"""Classical cascade trackers: PD, sliding-mode, and backstepping.

All three share the same outer position loop: a PD law with acceleration
feedforward produces a commanded thrust and, through small-angle inversion
of the translational dynamics, a desired roll/pitch pair.  The inner
attitude loop differs per controller and produces torques through the
attitude-space inertia, which are mapped to rotor inputs by inverting the
allocation.  Gains are bench presets, not tuned to reproduce any external
figures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import StepResult
from .dynamics import (
    ATT,
    INPUT_DIM,
    POS,
    RATE,
    VEL,
    QuadParams,
    coriolis_matrix,
    inertia_jacobian,
    inverse_control_allocation,
    wrap_angle,
)
from .references import RefPoint, ReferenceFn

PD = "pd"
SMC = "smc"
BSC = "bsc"
BASELINE_KINDS = (PD, SMC, BSC)

# Desired-tilt clamp keeps the small-angle inversion honest during the
# initial large-error transient.
TILT_LIMIT = 0.35

DEFAULT_U_MIN = np.zeros(INPUT_DIM)
DEFAULT_U_MAX = np.full(INPUT_DIM, 10.0)


def _vec3(value) -> np.ndarray:
    out = np.broadcast_to(np.asarray(value, dtype=float), (3,)).copy()
    if np.any(out <= 0.0):
        raise ValueError(f"gains must be strictly positive, got {out}")
    return out


@dataclass(frozen=True)
class PdGains:
    pos_p: np.ndarray = 2.0
    pos_d: np.ndarray = 2.8
    att_p: np.ndarray = 40.0
    att_d: np.ndarray = 12.0

    def __post_init__(self) -> None:
        for name in ("pos_p", "pos_d", "att_p", "att_d"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))


@dataclass(frozen=True)
class SmcGains:
    """Outer PD plus a boundary-layer sliding-mode attitude loop."""

    pos_p: np.ndarray = 2.0
    pos_d: np.ndarray = 2.8
    slope: np.ndarray = 6.0
    switch_gain: np.ndarray = 4.0
    boundary_layer: np.ndarray = 0.1

    def __post_init__(self) -> None:
        for name in ("pos_p", "pos_d", "slope", "switch_gain", "boundary_layer"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))


@dataclass(frozen=True)
class BscGains:
    """Outer PD plus a two-step backstepping attitude loop."""

    pos_p: np.ndarray = 2.0
    pos_d: np.ndarray = 2.8
    k1: np.ndarray = 6.0
    k2: np.ndarray = 8.0

    def __post_init__(self) -> None:
        for name in ("pos_p", "pos_d", "k1", "k2"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))


GainSet = PdGains | SmcGains | BscGains


def default_gains(kind: str) -> GainSet:
    if kind == PD:
        return PdGains()
    if kind == SMC:
        return SmcGains()
    if kind == BSC:
        return BscGains()
    raise ValueError(f"unknown baseline kind {kind!r}")


def _attitude_accel(kind: str, gains: GainSet, att_err: np.ndarray, rate: np.ndarray) -> np.ndarray:
    if kind == PD:
        return -gains.att_p * att_err - gains.att_d * rate
    if kind == SMC:
        surface = rate + gains.slope * att_err
        switching = np.clip(surface / gains.boundary_layer, -1.0, 1.0)
        return -gains.slope * rate - gains.switch_gain * switching
    if kind == BSC:
        # Integrator-chain backstepping collapses to this stabilizing form.
        return -(1.0 + gains.k1 * gains.k2) * att_err - (gains.k1 + gains.k2) * rate
    raise ValueError(f"unknown baseline kind {kind!r}")


def baseline_step(
    kind: str,
    gains: GainSet,
    x: np.ndarray,
    ref: RefPoint,
    params: QuadParams,
    u_min: np.ndarray = DEFAULT_U_MIN,
    u_max: np.ndarray = DEFAULT_U_MAX,
) -> tuple[np.ndarray, bool]:
    """One cascade update; returns ``(rotor input, clamped?)``.

    The returned input is clipped into ``[u_min, u_max]``; the flag
    reports whether the allocation inversion left that box.
    """
    x = np.asarray(x, dtype=float)
    pos, att, vel, rate = x[POS], x[ATT], x[VEL], x[RATE]

    a_cmd = ref.acceleration + gains.pos_d * (ref.velocity - vel) + gains.pos_p * (ref.position - pos)

    cphi, ctheta = np.cos(att[0]), np.cos(att[1])
    thrust = params.mass * (params.gravity + a_cmd[2]) / (cphi * ctheta)
    # Tilt inversion divides by thrust; keep the divisor away from zero.
    thrust_for_tilt = max(thrust, 0.1 * params.mass * params.gravity)
    cy, sy = np.cos(ref.yaw), np.sin(ref.yaw)
    theta_d = np.clip(
        params.mass * (a_cmd[0] * cy + a_cmd[1] * sy) / thrust_for_tilt, -TILT_LIMIT, TILT_LIMIT
    )
    phi_d = np.clip(
        params.mass * (a_cmd[0] * sy - a_cmd[1] * cy) / thrust_for_tilt, -TILT_LIMIT, TILT_LIMIT
    )

    att_err = np.array([att[0] - phi_d, att[1] - theta_d, wrap_angle(att[2] - ref.yaw)])
    accel_des = _attitude_accel(kind, gains, att_err, rate)
    torque = inertia_jacobian(att, params) @ accel_des + coriolis_matrix(att, rate, params) @ rate

    u_raw = inverse_control_allocation(np.maximum(thrust, 0.0), torque, params)
    clamped = bool(np.any(u_raw < u_min) or np.any(u_raw > u_max))
    return np.clip(u_raw, u_min, u_max), clamped


class BaselineController:
    """Closed-form cascade tracker driven by the instantaneous reference."""

    def __init__(
        self,
        kind: str,
        params: QuadParams,
        generator: ReferenceFn,
        gains: GainSet | None = None,
        u_min: np.ndarray = DEFAULT_U_MIN,
        u_max: np.ndarray = DEFAULT_U_MAX,
    ) -> None:
        if kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind {kind!r}")
        self.kind = kind
        self.name = kind
        self.params = params
        self.generator = generator
        self.gains = default_gains(kind) if gains is None else gains
        self.u_min = np.asarray(u_min, dtype=float)
        self.u_max = np.asarray(u_max, dtype=float)

    def reset(self) -> None:
        pass

    def step(self, t: float, x: np.ndarray, f_e: np.ndarray) -> StepResult:
        u, clamped = baseline_step(
            self.kind, self.gains, x, self.generator(t), self.params, self.u_min, self.u_max
        )
        return StepResult(u=u, info={"clamped": clamped})
