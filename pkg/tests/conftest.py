"""Shared fixtures: small reference runs reused across test modules."""

import numpy as np
import pytest

import kslab


@pytest.fixture(scope="session")
def n10_pinched_traj():
    """Short grow-up-regime run: n=10, pinched datum, adaptive steps.

    Small domain so the core fills quickly and the deviation develops the
    structure the energy machinery integrates against.
    """
    mesh = kslab.build_mesh(10, 1e4, 1024)
    u0 = kslab.make_pinched(10, 5.0, 1.0, mesh)
    return kslab.run(u0, kslab.SolverConfig(), 2.0,
                     output_times=np.linspace(0.0, 2.0, 5))


@pytest.fixture(scope="session")
def n5_scaled_traj():
    """Absorbing-regime run: n=5, scaled datum, long enough to settle."""
    mesh = kslab.build_mesh(5, 1e5, 1024)
    u0 = kslab.make_scaled(5, 0.9, 50.0, mesh)
    return kslab.run(u0, kslab.SolverConfig(), 50.0,
                     output_times=np.linspace(0.0, 50.0, 26))
