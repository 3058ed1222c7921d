import numpy as np
import pytest

from stealthsim.simkit.trace import MobilityTrace
from stealthsim.taxonomy import build_default_taxonomy


@pytest.fixture(scope="session")
def tax():
    return build_default_taxonomy()


def static_trace(coords, duration=10.0, dt=0.6, area=(400.0, 430.0)):
    """Trace in which every node holds its position for the whole run."""
    n_snap = int(np.ceil(duration / dt - 1e-9))
    times = np.round(np.arange(n_snap) * dt, 3)
    pos = np.repeat(np.asarray(coords, dtype=float)[None, :, :], n_snap, axis=0)
    return MobilityTrace(times, pos, tuple(range(len(coords))), area, dt)
