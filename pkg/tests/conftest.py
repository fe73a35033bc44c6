from __future__ import annotations

import numpy as np
import pytest

from active_smoothing import build_grid_agent


@pytest.fixture(scope="session")
def grid():
    return build_grid_agent()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240601)
