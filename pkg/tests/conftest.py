import numpy as np
import pytest

import drro

# Reference systems used across the suite.  The 2-state plant is the default
# workbench; the resonant 4-state system is the second desk-scale plant for
# the dominance table; the slow scalar plant stresses peaked spectra; the
# 8-state system is the performance benchmark.

PLANT_2STATE = {
    "A": [[0.7, 0.2], [0.0, 0.4]],
    "B_u": [[1.0], [0.0]],
    "B_w": [[0.0], [1.0]],
    "Q": [[1.0, 0.0], [0.0, 1.0]],
    "R": [[1.0]],
}

PLANT_SCALAR = {
    "A": [[0.5]],
    "B_u": [[1.0]],
    "B_w": [[1.0]],
    "Q": [[1.0]],
    "R": [[1.0]],
}


def _resonant_4state():
    c1, s1 = 0.98 * np.cos(0.4), 0.98 * np.sin(0.4)
    c2, s2 = 0.9 * np.cos(1.4), 0.9 * np.sin(1.4)
    return {
        "A": [[c1, -s1, 0.0, 0.0], [s1, c1, 0.0, 0.0], [0.0, 0.0, c2, -s2], [0.0, 0.0, s2, c2]],
        "B_u": [[1.0], [0.0], [0.5], [0.0]],
        "B_w": [[0.0], [1.0], [0.0], [0.7]],
        "Q": np.eye(4).tolist(),
        "R": [[1.0]],
    }


PLANT_4STATE = _resonant_4state()


def _random_8state(seed=7):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((8, 8))
    A *= 0.9 / np.max(np.abs(np.linalg.eigvals(A)))
    return {
        "A": A.tolist(),
        "B_u": rng.standard_normal((8, 1)).tolist(),
        "B_w": rng.standard_normal((8, 1)).tolist(),
        "Q": np.eye(8).tolist(),
        "R": [[1.0]],
    }


PLANT_8STATE = _random_8state()


@pytest.fixture(scope="session")
def plant_2state():
    return drro.plant_from_dict(PLANT_2STATE)


@pytest.fixture(scope="session")
def ctx_2state(plant_2state):
    return drro.prepare_plant(plant_2state, k=12)


@pytest.fixture(scope="session")
def gro_2state(ctx_2state):
    return drro.estimate_gamma_ro(ctx_2state)


@pytest.fixture(scope="session")
def plant_scalar():
    return drro.plant_from_dict(PLANT_SCALAR)


@pytest.fixture(scope="session")
def ctx_scalar(plant_scalar):
    return drro.prepare_plant(plant_scalar, k=12)


@pytest.fixture(scope="session")
def ctx_4state():
    return drro.prepare_plant(drro.plant_from_dict(PLANT_4STATE), k=11)


@pytest.fixture(scope="session")
def grid10():
    return drro.FrequencyGrid(10)


@pytest.fixture(scope="session")
def grid12():
    return drro.FrequencyGrid(12)
