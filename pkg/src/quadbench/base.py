"""Common controller-facing types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATUS_OK = "ok"
STATUS_DEGRADED = "degraded"


@dataclass(frozen=True)
class StepResult:
    """One control decision plus solver diagnostics.

    ``iterations`` and ``residual`` are controller specific (QP iterations
    and KKT residual for the linear controller, SQP iterations and defect
    norm for the nonlinear one, zeros for the closed-form baselines) and
    are the two diagnostic columns recorded in trace files.
    """

    u: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    cost: float = 0.0
    status: str = STATUS_OK
    info: dict = field(default_factory=dict)
