import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from quasicharge.grid import TransverseGrid

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def grid64():
    return TransverseGrid(64, 64, 16.0, 16.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.qc_session_start = time.monotonic()


def pytest_collection_modifyitems(session, config, items):
    # the suite-runtime criterion measures everything before it, so it runs last
    last = [it for it in items if it.get_closest_marker("runs_last")]
    items[:] = [it for it in items if not it.get_closest_marker("runs_last")] + last
