import json

import numpy as np
import pytest

import drro
from drro import (
    DimensionMismatch,
    DisturbanceNotScalar,
    FrequencyGrid,
    NotStabilizable,
    ParseError,
    SingularResolvent,
)
from drro.model import write_grid_samples_csv

from conftest import PLANT_SCALAR


def make_plant(**overrides):
    raw = {k: [list(row) for row in v] for k, v in PLANT_SCALAR.items()}
    raw.update(overrides)
    return drro.plant_from_dict(raw)


def test_minimal_plant_loads():
    p = make_plant()
    assert (p.n, p.d, p.p) == (1, 1, 1)


def test_load_plant_from_file(tmp_path):
    path = tmp_path / "plant.json"
    path.write_text(json.dumps(PLANT_SCALAR))
    p = drro.load_plant(path)
    assert p.n == 1
    assert p.content_hash() == make_plant().content_hash()


def test_missing_file_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        drro.load_plant(tmp_path / "nope.json")


def test_malformed_json_is_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        drro.load_plant(path)


def test_missing_key_is_parse_error():
    raw = dict(PLANT_SCALAR)
    del raw["Q"]
    with pytest.raises(ParseError):
        drro.plant_from_dict(raw)


def test_two_disturbance_columns_rejected():
    with pytest.raises(DisturbanceNotScalar):
        make_plant(B_w=[[1.0, 0.5]])


def test_unstabilizable_rejected():
    with pytest.raises(NotStabilizable):
        make_plant(A=[[2.0]], B_u=[[0.0]])


def test_zero_input_columns_rejected():
    with pytest.raises(DimensionMismatch):
        drro.PlantModel(
            A=np.array([[0.5]]),
            B_u=np.zeros((1, 0)),
            B_w=np.array([[1.0]]),
            Q=np.array([[1.0]]),
            R=np.zeros((0, 0)),
        )


def test_indefinite_weight_rejected():
    with pytest.raises(DimensionMismatch):
        make_plant(Q=[[-1.0]])


def test_shape_mismatch_rejected():
    with pytest.raises(DimensionMismatch):
        make_plant(R=[[1.0, 0.0], [0.0, 1.0]])


def test_grid_basics():
    g = FrequencyGrid(8)
    assert g.N == 256
    assert g.omegas[0] == 0.0
    assert np.all(np.diff(g.omegas) > 0)
    assert g.omegas[-1] < 2 * np.pi
    with pytest.raises(DimensionMismatch):
        FrequencyGrid(1)


def test_delay_plant_responses(grid10):
    # A = 0 collapses both responses to a pure delay in the disturbance-aligned
    # convention pinned by the factorization split check.
    wp = drro.WeightedPlant.from_plant(make_plant(A=[[0.0]]))
    F, G = drro.eval_plant_responses(wp, grid10)
    delay = np.exp(-1j * grid10.omegas)
    assert np.max(np.abs(F.values[:, 0, 0] - delay)) < 1e-12
    assert np.max(np.abs(G.values[:, 0, 0] - delay)) < 1e-12


def test_zero_disturbance_input(grid10):
    wp = drro.WeightedPlant.from_plant(make_plant(B_w=[[0.0]]))
    _, G = drro.eval_plant_responses(wp, grid10)
    assert np.max(np.abs(G.values)) == 0.0


def test_dc_gain(grid10):
    wp = drro.WeightedPlant.from_plant(make_plant())
    F, _ = drro.eval_plant_responses(wp, grid10)
    assert abs(F.values[0, 0, 0] - 2.0) < 1e-12  # 1 / (1 - 0.5) at omega = 0


def test_unit_circle_eigenvalue_raises(grid10):
    wp = drro.WeightedPlant.from_plant(make_plant(A=[[1.0]]))
    with pytest.raises(SingularResolvent):
        drro.eval_plant_responses(wp, grid10)


@pytest.mark.parametrize("seed", range(4))
def test_response_symmetry_and_causality(seed):
    # Random stable plants: conjugate symmetry, strict causality of F and G.
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    A = rng.standard_normal((n, n))
    A *= rng.uniform(0.3, 0.9) / np.max(np.abs(np.linalg.eigvals(A)))
    plant = drro.PlantModel(
        A=A,
        B_u=rng.standard_normal((n, 2)),
        B_w=rng.standard_normal((n, 1)),
        Q=np.eye(n) + 0.1 * np.diag(rng.uniform(0, 1, n)),
        R=np.eye(2),
    )
    grid = FrequencyGrid(10)
    F, G = drro.eval_plant_responses(drro.WeightedPlant.from_plant(plant), grid)
    for X in (F, G):
        assert drro.conjugate_symmetry_error(X.values) < 1e-12 * max(1.0, np.max(np.abs(X.values)))
        assert drro.causal_leak(X.values) < 1e-8
    lag0 = np.linalg.norm(drro.lag_coefficients(F.values)[0])
    assert lag0 < 1e-8
    lag0_g = np.linalg.norm(drro.lag_coefficients(G.values)[0])
    assert lag0_g < 1e-8


def test_weighted_plant_roots():
    rng = np.random.default_rng(3)
    M = rng.standard_normal((3, 3))
    Q = M @ M.T + 0.5 * np.eye(3)
    plant = drro.PlantModel(
        A=0.5 * np.eye(3),
        B_u=np.eye(3),
        B_w=np.array([[1.0], [0.0], [0.0]]),
        Q=Q,
        R=np.eye(3),
    )
    wp = drro.WeightedPlant.from_plant(plant)
    assert np.linalg.norm(wp.sqrtQ @ wp.sqrtQ - Q) <= 1e-12 * np.linalg.norm(Q)
    assert np.linalg.norm(wp.invSqrtR @ wp.sqrtR - np.eye(3)) < 1e-12


def test_grid_samples_csv_roundtrip(tmp_path, grid10):
    wp = drro.WeightedPlant.from_plant(make_plant())
    F, _ = drro.eval_plant_responses(wp, grid10)
    path = tmp_path / "F.csv"
    write_grid_samples_csv(F, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "omega,re00,im00"
    assert len(lines) == grid10.N + 1
    om, re, im = (float(x) for x in lines[1].split(","))
    assert om == 0.0 and abs(re - 2.0) < 1e-15 and im == 0.0
