"""Shared fixtures: default params and cached closed-loop helix runs."""

from __future__ import annotations

import numpy as np
import pytest

import quadbench as qb
from quadbench.references import make_helix


@pytest.fixture(scope="session")
def params() -> qb.QuadParams:
    return qb.QuadParams()


@pytest.fixture(scope="session")
def helix_runs(params):
    """One 40 s default-helix closed-loop trace per controller kind.

    Session scoped: the NMPC run is the expensive one and several test
    modules share these traces.
    """
    cache: dict[str, qb.SimTrace] = {}

    def get(kind: str) -> qb.SimTrace:
        if kind not in cache:
            scenario = qb.Scenario(
                params=params,
                controller=qb.ControllerSpec(kind=kind),
                reference=make_helix(),
                disturbance=qb.disturbance_profile("none"),
                dt=0.1,
                duration=40.0,
            )
            cache[kind] = qb.run_closed_loop(scenario)
        return cache[kind]

    return get


def band_entry(trace: qb.SimTrace, band: float = 0.1):
    """First grid time from which the position error norm stays below band."""
    err = np.linalg.norm(trace.errors[:, :3], axis=1)
    for i in range(err.size):
        if np.all(err[i:] < band):
            return float(trace.t[i])
    return None
