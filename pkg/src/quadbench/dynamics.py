"""Rigid-body quadrotor model: kinematics, rotor allocation, Euler-Lagrange dynamics.

State layout (12 entries, world frame unless noted):

    x = [x, y, z, phi, theta, psi, vx, vy, vz, dphi, dtheta, dpsi]

positions in m, attitude as ZYX Euler angles in rad, linear velocity in
m/s, Euler-angle rates in rad/s.  The rotor input vector holds the four
squared rotor speeds ``u = (w1^2, w2^2, w3^2, w4^2)`` in rad^2/s^2, and a
disturbance is a 3-vector force in N applied to the translational axes.

All functions broadcast over leading batch dimensions, so a caller may
evaluate the model on an ``(n, 12)`` stack of states in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATE_DIM = 12
INPUT_DIM = 4

POS = slice(0, 3)
ATT = slice(3, 6)
VEL = slice(6, 9)
RATE = slice(9, 12)

# Hover settles at 4.9 (rad/s)^2 per rotor; the default thrust coefficient
# is calibrated so that four rotors at this value exactly carry the weight.
HOVER_INPUT_ANCHOR = 4.9

COS_PITCH_TOL = 1e-6


class SingularAttitudeError(ValueError):
    """Pitch too close to +-pi/2 for the Euler-angle parameterization."""


@dataclass(frozen=True)
class QuadParams:
    """Physical constants of the vehicle.

    ``thrust_coeff`` maps one squared rotor speed to thrust (N s^2/rad^2),
    ``drag_coeff`` to yaw torque (N m s^2/rad^2), ``arm_length`` is the
    rotor offset from the center of mass (m).  The inertia matrix is
    diagonal with ``inertia_xx == inertia_yy``.
    """

    mass: float = 1.0
    gravity: float = 9.81
    inertia_xx: float = 5e-3
    inertia_yy: float = 5e-3
    inertia_zz: float = 9e-3
    thrust_coeff: float = field(default=1.0 * 9.81 / (4.0 * HOVER_INPUT_ANCHOR))
    drag_coeff: float = 1e-2
    arm_length: float = 0.25

    def __post_init__(self) -> None:
        for name in (
            "mass",
            "gravity",
            "inertia_xx",
            "inertia_yy",
            "inertia_zz",
            "thrust_coeff",
            "drag_coeff",
            "arm_length",
        ):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"QuadParams.{name} must be strictly positive, got {value}")
        if self.inertia_xx != self.inertia_yy:
            raise ValueError(
                "QuadParams requires inertia_xx == inertia_yy "
                f"(got {self.inertia_xx} vs {self.inertia_yy})"
            )

    @classmethod
    def calibrated(cls, mass: float = 1.0, gravity: float = 9.81, **kwargs) -> "QuadParams":
        """Params with the thrust coefficient tied to the hover anchor."""
        k = mass * gravity / (4.0 * HOVER_INPUT_ANCHOR)
        return cls(mass=mass, gravity=gravity, thrust_coeff=k, **kwargs)

    @property
    def inertia_diag(self) -> np.ndarray:
        return np.array([self.inertia_xx, self.inertia_yy, self.inertia_zz])

    @property
    def hover_rotor_input(self) -> float:
        """Squared rotor speed at which four rotors carry the weight."""
        return self.mass * self.gravity / (4.0 * self.thrust_coeff)


def wrap_angle(angle):
    """Wrap angles into (-pi, pi]."""
    wrapped = np.remainder(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def validate_state(x: np.ndarray) -> np.ndarray:
    """Check shape and finiteness of a state vector (or batch)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != STATE_DIM:
        raise ValueError(f"state must have {STATE_DIM} entries, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("state contains non-finite entries")
    return x


def validate_rotor_input(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != INPUT_DIM:
        raise ValueError(f"rotor input must have {INPUT_DIM} entries, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("rotor input contains non-finite entries")
    if np.any(u < 0.0):
        raise ValueError("rotor input entries are squared speeds and must be >= 0")
    return u


def rotation_matrix(attitude: np.ndarray) -> np.ndarray:
    """Body-to-world rotation for ZYX Euler angles ``(phi, theta, psi)``.

    Returns an array of shape ``(..., 3, 3)``.
    """
    attitude = np.asarray(attitude, dtype=float)
    sp, st, sy = np.sin(attitude[..., 0]), np.sin(attitude[..., 1]), np.sin(attitude[..., 2])
    cp, ct, cy = np.cos(attitude[..., 0]), np.cos(attitude[..., 1]), np.cos(attitude[..., 2])
    rows = [
        [cy * ct, cy * st * sp - sy * cp, cy * st * cp + sy * sp],
        [sy * ct, sy * st * sp + cy * cp, sy * st * cp - cy * sp],
        [-st, ct * sp, ct * cp],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def _check_pitch(cos_theta: np.ndarray) -> None:
    if np.any(np.abs(cos_theta) <= COS_PITCH_TOL):
        raise SingularAttitudeError("pitch within tolerance of +-pi/2; Euler rates undefined")


def euler_rate_matrix(attitude: np.ndarray) -> np.ndarray:
    """Matrix mapping Euler-angle rates to body angular rates."""
    attitude = np.asarray(attitude, dtype=float)
    sp, cp = np.sin(attitude[..., 0]), np.cos(attitude[..., 0])
    st, ct = np.sin(attitude[..., 1]), np.cos(attitude[..., 1])
    _check_pitch(ct)
    one = np.ones_like(sp)
    zero = np.zeros_like(sp)
    rows = [
        [one, zero, -st],
        [zero, cp, ct * sp],
        [zero, -sp, ct * cp],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def inverse_euler_rate_matrix(attitude: np.ndarray) -> np.ndarray:
    """Matrix mapping body angular rates to Euler-angle rates."""
    attitude = np.asarray(attitude, dtype=float)
    sp, cp = np.sin(attitude[..., 0]), np.cos(attitude[..., 0])
    st, ct = np.sin(attitude[..., 1]), np.cos(attitude[..., 1])
    _check_pitch(ct)
    tt = st / ct
    one = np.ones_like(sp)
    zero = np.zeros_like(sp)
    rows = [
        [one, sp * tt, cp * tt],
        [zero, cp, -sp],
        [zero, sp / ct, cp / ct],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def inertia_jacobian(attitude: np.ndarray, params: QuadParams) -> np.ndarray:
    """Attitude-space inertia ``W^T I W`` for the rotational energy.

    Symmetric and positive definite away from the pitch singularity.
    """
    attitude = np.asarray(attitude, dtype=float)
    ixx, iyy, izz = params.inertia_xx, params.inertia_yy, params.inertia_zz
    sp, cp = np.sin(attitude[..., 0]), np.cos(attitude[..., 0])
    st, ct = np.sin(attitude[..., 1]), np.cos(attitude[..., 1])
    out = np.zeros(attitude.shape[:-1] + (3, 3))
    out[..., 0, 0] = ixx
    out[..., 0, 2] = out[..., 2, 0] = -ixx * st
    out[..., 1, 1] = iyy * cp**2 + izz * sp**2
    out[..., 1, 2] = out[..., 2, 1] = (iyy - izz) * cp * sp * ct
    out[..., 2, 2] = ixx * st**2 + iyy * sp**2 * ct**2 + izz * cp**2 * ct**2
    return out


def coriolis_matrix(attitude: np.ndarray, rate: np.ndarray, params: QuadParams) -> np.ndarray:
    """Velocity-dependent coupling matrix of the rotational dynamics.

    Satisfies the Euler-Lagrange identity: the rotational torque equals
    ``J(eta) @ eta_dd + C(eta, eta_d) @ eta_d`` for the kinetic energy
    built on :func:`inertia_jacobian`.
    """
    attitude = np.asarray(attitude, dtype=float)
    rate = np.asarray(rate, dtype=float)
    ixx, iyy, izz = params.inertia_xx, params.inertia_yy, params.inertia_zz
    sp, cp = np.sin(attitude[..., 0]), np.cos(attitude[..., 0])
    st, ct = np.sin(attitude[..., 1]), np.cos(attitude[..., 1])
    dp, dt, dy = rate[..., 0], rate[..., 1], rate[..., 2]

    batch = np.broadcast_shapes(attitude.shape[:-1], rate.shape[:-1])
    out = np.zeros(batch + (3, 3))
    out[..., 0, 1] = (
        (iyy - izz) * (dt * cp * sp + dy * sp**2 * ct) + (izz - iyy) * dy * cp**2 * ct - ixx * dy * ct
    )
    out[..., 0, 2] = (izz - iyy) * dy * cp * sp * ct**2
    out[..., 1, 0] = (
        (izz - iyy) * (dt * cp * sp + dy * sp**2 * ct) + (iyy - izz) * dy * cp**2 * ct + ixx * dy * ct
    )
    out[..., 1, 1] = (izz - iyy) * dp * cp * sp
    out[..., 1, 2] = -ixx * dy * st * ct + iyy * dy * sp**2 * st * ct + izz * dy * cp**2 * st * ct
    out[..., 2, 0] = (iyy - izz) * dy * ct**2 * sp * cp - ixx * dt * ct
    out[..., 2, 1] = (
        (izz - iyy) * (dt * cp * sp * st + dp * sp**2 * ct)
        + (iyy - izz) * dp * cp**2 * ct
        + ixx * dy * st * ct
        - iyy * dy * sp**2 * st * ct
        - izz * dy * cp**2 * st * ct
    )
    out[..., 2, 2] = (
        (iyy - izz) * dp * cp * sp * ct**2
        - iyy * dt * sp**2 * ct * st
        - izz * dt * cp**2 * ct * st
        + ixx * dt * ct * st
    )
    return out


def _allocation(u: np.ndarray, params: QuadParams) -> tuple[np.ndarray, np.ndarray]:
    """Linear rotor mixing without domain checks."""
    k, b, l = params.thrust_coeff, params.drag_coeff, params.arm_length
    thrust = k * u.sum(axis=-1)
    tau_phi = l * k * (u[..., 3] - u[..., 1])
    tau_theta = l * k * (u[..., 2] - u[..., 0])
    tau_psi = b * (u[..., 0] - u[..., 1] + u[..., 2] - u[..., 3])
    return thrust, np.stack([tau_phi, tau_theta, tau_psi], axis=-1)


def control_allocation(u: np.ndarray, params: QuadParams) -> tuple[np.ndarray, np.ndarray]:
    """Map squared rotor speeds to collective thrust and body torques.

    Plus configuration: rotors 1/3 on the body x arm, 2/4 on the y arm,
    alternating spin so that yaw torque is ``b (u1 - u2 + u3 - u4)``.

    Returns ``(thrust, torque)`` with shapes ``(...)`` and ``(..., 3)``.
    """
    u = validate_rotor_input(u)
    return _allocation(u, params)


def inverse_control_allocation(
    thrust: np.ndarray, torque: np.ndarray, params: QuadParams
) -> np.ndarray:
    """Invert :func:`control_allocation`; the result may have negative entries."""
    thrust = np.asarray(thrust, dtype=float)
    torque = np.asarray(torque, dtype=float)
    k, b, l = params.thrust_coeff, params.drag_coeff, params.arm_length
    base = thrust / (4.0 * k)
    d_phi = torque[..., 0] / (2.0 * l * k)
    d_theta = torque[..., 1] / (2.0 * l * k)
    d_psi = torque[..., 2] / (4.0 * b)
    return np.stack(
        [
            base - d_theta + d_psi,
            base - d_phi - d_psi,
            base + d_theta + d_psi,
            base + d_phi - d_psi,
        ],
        axis=-1,
    )


def hover_input(params: QuadParams) -> np.ndarray:
    """Equal rotor inputs whose collective thrust matches the weight."""
    return np.full(INPUT_DIM, params.hover_rotor_input)


def dynamics_rhs(
    x: np.ndarray,
    u: np.ndarray,
    f_e: np.ndarray,
    params: QuadParams,
) -> np.ndarray:
    """Continuous-time state derivative ``xdot = f(x, u, f_e)``.

    Translational block: gravity plus thrust tilted through the body z
    axis plus the external force ``f_e / mass``.  Rotational block:
    ``eta_dd = J(eta)^-1 (tau - C(eta, eta_d) eta_d)``.

    Evaluates the smooth extension for out-of-range inputs so that finite
    differencing at the input bounds stays well defined.  Raises
    :class:`SingularAttitudeError` near pitch +-pi/2.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    f_e = np.asarray(f_e, dtype=float)
    batch = np.broadcast_shapes(x.shape[:-1], u.shape[:-1], f_e.shape[:-1])

    attitude = x[..., ATT]
    rate = x[..., RATE]

    thrust, torque = _allocation(u, params)
    sp, cp = np.sin(attitude[..., 0]), np.cos(attitude[..., 0])
    st, ct = np.sin(attitude[..., 1]), np.cos(attitude[..., 1])
    sy, cy = np.sin(attitude[..., 2]), np.cos(attitude[..., 2])
    _check_pitch(ct)

    body_z = np.stack(
        [cy * st * cp + sy * sp, sy * st * cp - cy * sp, ct * cp], axis=-1
    )
    gravity = np.zeros(3)
    gravity[2] = -params.gravity
    accel = gravity + body_z * (thrust / params.mass)[..., None] + f_e / params.mass

    inertia = inertia_jacobian(attitude, params)
    coupling = coriolis_matrix(attitude, rate, params)
    torque_net = torque - np.einsum("...ij,...j->...i", coupling, rate)
    shape = batch + (3,)
    rate_dd = np.linalg.solve(
        np.broadcast_to(inertia, batch + (3, 3)), np.broadcast_to(torque_net, shape)[..., None]
    )[..., 0]

    out = np.empty(batch + (STATE_DIM,))
    out[..., POS] = np.broadcast_to(x[..., VEL], shape)
    out[..., ATT] = np.broadcast_to(rate, shape)
    out[..., VEL] = np.broadcast_to(accel, shape)
    out[..., RATE] = rate_dd
    return out
