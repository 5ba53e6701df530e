"""Reference trajectories and horizon windows for the tracking controllers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import ATT, POS, STATE_DIM, VEL

HELIX_RADIUS = 2.0
HELIX_ANGULAR_RATE = 0.4
HELIX_CLIMB_RATE = 0.2

ReferenceFn = Callable[[float], "RefPoint"]


@dataclass(frozen=True)
class RefPoint:
    """Reference position with exact analytic derivatives and a yaw setpoint.

    The attitude reference is level flight: roll and pitch zero, yaw as
    given, zero angular rates.
    """

    position: np.ndarray
    yaw: float = 0.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def to_state(self) -> np.ndarray:
        """Embed as a 12-entry reference state."""
        state = np.zeros(STATE_DIM)
        state[POS] = self.position
        state[ATT][...] = 0.0
        state[5] = self.yaw
        state[VEL] = self.velocity
        return state


def helix_reference(
    t: float,
    radius: float = HELIX_RADIUS,
    angular_rate: float = HELIX_ANGULAR_RATE,
    climb_rate: float = HELIX_CLIMB_RATE,
) -> RefPoint:
    """Climbing circle: ``(r cos(w t), r sin(w t), c t)`` with yaw 0."""
    if t < 0.0:
        raise ValueError(f"reference time must be >= 0, got {t}")
    w = angular_rate
    c, s = np.cos(w * t), np.sin(w * t)
    return RefPoint(
        position=np.array([radius * c, radius * s, climb_rate * t]),
        yaw=0.0,
        velocity=np.array([-radius * w * s, radius * w * c, climb_rate]),
        acceleration=np.array([-radius * w**2 * c, -radius * w**2 * s, 0.0]),
    )


def make_helix(
    radius: float = HELIX_RADIUS,
    angular_rate: float = HELIX_ANGULAR_RATE,
    climb_rate: float = HELIX_CLIMB_RATE,
) -> ReferenceFn:
    def generator(t: float) -> RefPoint:
        return helix_reference(t, radius=radius, angular_rate=angular_rate, climb_rate=climb_rate)

    return generator


def make_hover(position, yaw: float = 0.0) -> ReferenceFn:
    """Constant setpoint generator."""
    position = np.asarray(position, dtype=float).copy()

    def generator(t: float) -> RefPoint:
        return RefPoint(position=position.copy(), yaw=yaw)

    return generator


def reference_window(
    generator: ReferenceFn, t_start: float, n_steps: int, dt: float
) -> np.ndarray:
    """Reference states at ``t_start + dt, ..., t_start + n_steps * dt``.

    Returns an ``(n_steps, 12)`` array of embedded reference states, the
    per-stage targets a horizon controller subtracts to form its tracking
    errors.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return np.stack(
        [generator(t_start + j * dt).to_state() for j in range(1, n_steps + 1)]
    )
