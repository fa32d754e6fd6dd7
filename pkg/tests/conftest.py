from __future__ import annotations

import numpy as np
import pytest

from pcprmhd.state import Eos

REST_GAS = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.5])
REST_FIELD = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 3.0])


@pytest.fixture
def eos() -> Eos:
    return Eos(5.0 / 3.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
