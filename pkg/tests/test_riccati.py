import numpy as np
import pytest
import scipy.linalg

import drro
from drro import FrequencyGrid, WeightedPlant

from conftest import PLANT_2STATE
from oracles import scalar_dare_bisection
from test_model import make_plant


def prepared(plant):
    wp = WeightedPlant.from_plant(plant)
    rd = drro.solve_dare(wp)
    return wp, rd


def test_dare_delay_plant():
    wp, rd = prepared(make_plant(A=[[0.0]]))
    assert abs(rd.P[0, 0] - 1.0) < 1e-14
    assert abs(rd.K_lqr[0, 0]) < 1e-14
    assert abs(rd.A_K[0, 0]) < 1e-14


def test_dare_scalar_against_bisection_oracle():
    wp, rd = prepared(make_plant())
    P_ref = scalar_dare_bisection(0.5)
    assert abs(rd.P[0, 0] - P_ref) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_dare_against_scipy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    A = rng.standard_normal((n, n))
    A *= rng.uniform(0.4, 1.4) / np.max(np.abs(np.linalg.eigvals(A)))
    B = rng.standard_normal((n, 2))
    M = rng.standard_normal((n, n))
    Q = M @ M.T + np.eye(n)
    plant = drro.PlantModel(A=A, B_u=B, B_w=rng.standard_normal((n, 1)), Q=Q, R=np.eye(2))
    wp, rd = prepared(plant)
    P_ref = scipy.linalg.solve_discrete_are(A, B, Q, np.eye(2))
    assert np.linalg.norm(rd.P - P_ref) <= 1e-8 * np.linalg.norm(P_ref)
    assert np.max(np.abs(np.linalg.eigvals(rd.A_K))) < 1.0


def test_adjoint_triple_delay_plant():
    wp, rd = prepared(make_plant(A=[[0.0]]))
    triple = drro.adjoint_triple(rd, wp)
    assert abs(triple.Abar[0, 0]) < 1e-14
    assert abs(triple.Dbar[0, 0]) < 1e-14
    assert abs(triple.Cbar[0, 0] + 1.0 / np.sqrt(2.0)) < 1e-14


def test_adjoint_triple_zero_disturbance():
    wp, rd = prepared(make_plant(B_w=[[0.0]]))
    assert np.max(np.abs(drro.adjoint_triple(rd, wp).Dbar)) == 0.0


def test_adjoint_triple_scalar_values():
    wp, rd = prepared(make_plant())
    triple = drro.adjoint_triple(rd, wp)
    P = scalar_dare_bisection(0.5)
    K = P * 0.5 / (1.0 + P)
    A_K = 0.5 - K
    assert abs(triple.Abar[0, 0] - A_K) < 1e-12
    assert abs(triple.Dbar[0, 0] - A_K * P) < 1e-12
    assert abs(triple.Cbar[0, 0] + 1.0 / np.sqrt(1.0 + P)) < 1e-12


def test_factors_delay_plant(grid10):
    wp, rd = prepared(make_plant(A=[[0.0]]))
    fac = drro.canonical_factors(rd, wp, grid10)
    assert np.max(np.abs(fac.Delta.values - np.sqrt(2.0))) < 1e-12
    assert np.max(np.abs(fac.DeltaInv.values - 1.0 / np.sqrt(2.0))) < 1e-12
    # benchmark from the pointwise formula -conj(F) G / (1 + |F|^2)
    F, G = drro.eval_plant_responses(wp, grid10)
    expected = -np.conj(F.values) * G.values / (1.0 + np.abs(F.values) ** 2)
    assert np.max(np.abs(fac.Kcirc.values - expected)) < 1e-12
    assert np.max(np.abs(fac.Kcirc.values + 0.5)) < 1e-12


def test_factors_zero_disturbance(grid10):
    wp, rd = prepared(make_plant(B_w=[[0.0]]))
    fac = drro.canonical_factors(rd, wp, grid10)
    for part in (fac.Kcirc, fac.Tpart, fac.Upart):
        assert np.max(np.abs(part.values)) < 1e-14


@pytest.mark.parametrize("plant_dict", [None, PLANT_2STATE])
def test_factor_identities(plant_dict, grid10):
    plant = make_plant() if plant_dict is None else drro.plant_from_dict(plant_dict)
    wp, rd = prepared(plant)
    fac = drro.canonical_factors(rd, wp, grid10)
    F, _ = drro.eval_plant_responses(wp, grid10)
    FH = np.conj(np.swapaxes(F.values, 1, 2))
    spec = np.conj(np.swapaxes(fac.Delta.values, 1, 2)) @ fac.Delta.values
    target = np.eye(plant.d) + FH @ F.values
    assert np.max(np.abs(spec - target)) <= 1e-8 * max(1.0, np.max(np.abs(target)))
    split = fac.Delta.values @ fac.Kcirc.values - fac.Tpart.values - fac.Upart.values
    assert np.max(np.abs(split)) <= 1e-6
    # DeltaInv agrees with direct pointwise inversion
    direct = np.linalg.inv(fac.Delta.values)
    assert np.max(np.abs(direct - fac.DeltaInv.values)) <= 1e-10


def test_causal_anticausal_split(ctx_2state):
    fac = ctx_2state.factors
    assert drro.anticausal_leak(fac.Tpart.values) < 1e-8
    assert drro.causal_leak(fac.Upart.values) < 1e-8
    assert drro.causal_leak(fac.Delta.values) < 1e-8
    assert drro.causal_leak(fac.DeltaInv.values) < 1e-8
    # the anticausal taps of Delta Kcirc match Tpart
    dk = drro.lag_coefficients(fac.Delta.values @ fac.Kcirc.values)
    tp = drro.lag_coefficients(fac.Tpart.values)
    N = ctx_2state.grid.N
    assert np.max(np.abs(dk[N // 2 + 1 :] - tp[N // 2 + 1 :])) < 1e-6


def test_delta_limit_convention(ctx_2state):
    # Constant (infinite-frequency) term of Delta is the positive-definite
    # sqrtRBPB invSqrtR: lag-0 tap of the causal expansion.
    lag0 = drro.lag_coefficients(ctx_2state.factors.Delta.values)[0].real
    expected = ctx_2state.riccati.sqrtRBPB @ ctx_2state.wp.invSqrtR
    assert np.max(np.abs(lag0 - expected)) < 1e-10
