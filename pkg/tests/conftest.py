"""Shared fixtures: one moderate simulated batch reused by the unit tests."""

import numpy as np
import pytest

from pvcell.sampling import SimulationConfig, simulate_batch


@pytest.fixture(scope="session")
def batch_20k():
    """Unit-intensity batch for statistics and fitting unit tests."""
    return simulate_batch(SimulationConfig(lam=1.0, n_cells=20_000, seed=314, threads=1))


@pytest.fixture(scope="session")
def volumes_20k(batch_20k):
    return np.asarray(batch_20k.volumes)
