import numpy as np
import pytest

import drro
from drro import (
    ControllerSamples,
    FrequencyGrid,
    GammaInfeasible,
    GridSamples,
    MaxItersExceeded,
    ScalarFactor,
    bbar_from_l,
    impulse_response,
    n_from_s,
    s_minus_from_bbar,
)
from drro.errors import ImaginaryLeak
from drro.riccati import AdjointTriple

from oracles import scalar_dare_bisection, toeplitz_dual_value, truncated_series_bbar
from test_model import make_plant


def scalar_triple(a=0.5):
    P = scalar_dare_bisection(a)
    K = P * a / (1.0 + P)
    A_K = a - K
    return AdjointTriple(
        Abar=np.array([[A_K]]),
        Cbar=np.array([[-1.0 / np.sqrt(1.0 + P)]]),
        Dbar=np.array([[A_K * P]]),
    )


def test_s_minus_zero_bbar(grid10):
    triple = scalar_triple()
    S = s_minus_from_bbar(np.zeros((1, 1)), triple, grid10)
    assert np.max(np.abs(S.values)) == 0.0


def test_s_minus_zero_abar(grid10):
    triple = AdjointTriple(Abar=np.zeros((1, 1)), Cbar=np.array([[-0.3]]), Dbar=np.array([[1.0]]))
    S = s_minus_from_bbar(np.array([[2.0]]), triple, grid10)
    expected = np.exp(1j * grid10.omegas) * (-0.3) * 2.0
    assert np.max(np.abs(S.values[:, 0, 0] - expected)) < 1e-12


def test_s_minus_scalar_oracle(grid10):
    triple = scalar_triple()
    Bbar = np.array([[0.7]])
    S = s_minus_from_bbar(Bbar, triple, grid10)
    z = np.exp(1j * grid10.omegas)
    expected = triple.Cbar[0, 0] * Bbar[0, 0] / (np.conj(z) - triple.Abar[0, 0])
    assert np.max(np.abs(S.values[:, 0, 0] - expected)) < 1e-12
    assert drro.anticausal_leak(S.values) < 1e-10


def test_n_from_s_zero(grid10):
    S = GridSamples(grid10, np.zeros((grid10.N, 1, 1), dtype=complex))
    spec = n_from_s(S, gamma=3.0)
    assert np.max(np.abs(spec.values - 1.0)) == 0.0


def test_n_from_s_closed_form(grid10):
    gamma = 2.5
    values = np.full((grid10.N, 1, 1), np.sqrt(2.0 * gamma), dtype=complex)
    spec = n_from_s(GridSamples(grid10, values), gamma)
    assert np.max(np.abs(spec.values - 4.0)) < 1e-12  # radicand is exactly 9


def test_n_from_s_multirow(grid10):
    # |S|^2 sums over the input rows
    gamma = 1.0
    vals = np.zeros((grid10.N, 2, 1), dtype=complex)
    vals[:, 0, 0] = 1.0
    vals[:, 1, 0] = 1.0j
    spec = n_from_s(GridSamples(grid10, vals), gamma)
    expected = 0.25 * (1.0 + 3.0) ** 2
    assert np.max(np.abs(spec.values - expected)) < 1e-12


def test_bbar_from_unit_factor(grid10):
    triple = scalar_triple()
    L = ScalarFactor(grid10, np.ones(grid10.N, dtype=complex))
    assert abs(bbar_from_l(L, triple)[0, 0] - triple.Dbar[0, 0]) < 1e-12


def test_bbar_zero_dbar(grid10):
    triple = AdjointTriple(Abar=np.array([[0.4]]), Cbar=np.array([[-0.5]]), Dbar=np.zeros((1, 1)))
    L = ScalarFactor(grid10, np.ones(grid10.N, dtype=complex))
    assert np.max(np.abs(bbar_from_l(L, triple))) == 0.0


def test_bbar_two_tap_factor(grid10):
    triple = scalar_triple()
    a = triple.Abar[0, 0]
    d = triple.Dbar[0, 0]
    L_vals = 1.0 + 0.5 * np.exp(-1j * grid10.omegas)
    L = ScalarFactor(grid10, L_vals)
    got = bbar_from_l(L, triple)
    assert abs(got[0, 0] - d * (1.0 + 0.5 * a)) < 1e-12
    series = truncated_series_bbar(triple.Abar, triple.Dbar, L_vals)
    assert abs(got[0, 0] - series[0, 0]) < 1e-10


def test_bbar_imaginary_leak(grid10):
    triple = scalar_triple()
    L = ScalarFactor(grid10, np.full(grid10.N, 1.0 + 0.5j))
    with pytest.raises(ImaginaryLeak):
        bbar_from_l(L, triple)


def test_huge_gamma_recovers_nominal_optimal(ctx_2state):
    state, controller = ctx_2state.synthesize(1e12)
    assert state.iters <= 2
    assert np.max(np.abs(state.Lfac.values - 1.0)) < 1e-10
    assert np.max(np.abs(state.Bbar - ctx_2state.triple.Dbar)) < 1e-10
    KH2 = drro.h2_controller(ctx_2state.factors)
    assert np.max(np.abs(controller.K.values - KH2.K.values)) < 1e-6


def test_zero_disturbance_synthesis(grid10):
    plant = make_plant(B_w=[[0.0]])
    ctx = drro.prepare_plant(plant, grid10)
    state, controller = ctx.synthesize(5.0)
    assert np.max(np.abs(state.Bbar)) == 0.0
    assert np.max(np.abs(controller.K.values)) < 1e-14
    assert np.max(np.abs(ctx.regret_values(controller))) < 1e-14


def test_two_state_kkt_certificate(ctx_2state, gro_2state):
    state, controller = ctx_2state.synthesize(2.0 * gro_2state)
    assert state.kkt_residual <= 1e-6
    assert state.Lfac.causal_leak() <= 1e-6
    assert controller.causal_leak() <= 1e-6
    assert np.min(state.Nspec.values) >= 1.0 - 1e-10
    assert drro.anticausal_leak(state.S_minus.values) <= 1e-6
    C = ctx_2state.regret_values(controller)
    assert np.max(C) < 2.0 * gro_2state


def test_fixed_point_certificate(ctx_2state, gro_2state):
    fp_tol = 1e-9
    state, _ = ctx_2state.synthesize(2.0 * gro_2state, fp_tol=fp_tol)
    S = s_minus_from_bbar(state.Bbar, ctx_2state.triple, ctx_2state.grid)
    L = drro.spectral_factor_dft(n_from_s(S, 2.0 * gro_2state))
    moved = bbar_from_l(L, ctx_2state.triple)
    delta = np.linalg.norm(moved - state.Bbar) / max(1.0, np.linalg.norm(state.Bbar))
    assert delta <= 10.0 * fp_tol


def test_synthesis_history_on_max_iters(ctx_2state, gro_2state):
    with pytest.raises(MaxItersExceeded) as info:
        ctx_2state.synthesize(gro_2state * (1.0 + 1e-7), max_iters=5)
    assert len(info.value.history) == 5


def test_infeasible_gamma_detected(ctx_2state, gro_2state):
    with pytest.raises((GammaInfeasible, MaxItersExceeded)):
        ctx_2state.synthesize(1e-3 * gro_2state, max_iters=3000)


def test_dual_objective_minimized_at_synthesized_controller(ctx_2state, gro_2state):
    gamma = 2.0 * gro_2state
    _, K_dr = ctx_2state.synthesize(gamma)
    KH2 = drro.h2_controller(ctx_2state.factors)
    K_ro = drro.ro_limit_controller(ctx_2state, gamma_ro_est=gro_2state)

    def problem_objective(K):
        C = ctx_2state.regret_values(K)
        if np.max(C) >= gamma:
            return np.inf
        return float(np.mean(1.0 / (1.0 - C / gamma)))

    j_dr = problem_objective(K_dr)
    assert j_dr <= problem_objective(KH2) + 1e-10
    assert j_dr <= problem_objective(K_ro) + 1e-10


def test_saddle_stationarity(ctx_2state, gro_2state):
    gamma = 2.0 * gro_2state
    state, K_dr = ctx_2state.synthesize(gamma)
    M = state.Nspec.values  # worst-case spectrum at this gamma
    d, p = ctx_2state.plant.d, ctx_2state.plant.p
    omegas = ctx_2state.grid.omegas

    def dual_objective(K_values):
        E = ctx_2state.factors.Delta.values @ (K_values - ctx_2state.factors.Kcirc.values)
        C = np.sum(np.abs(E[:, :, 0]) ** 2, axis=1)
        return float(np.mean(-M + 2.0 * np.sqrt(M) + C * M / gamma))

    j0 = dual_objective(K_dr.K.values)
    eps = 1e-4
    rng = np.random.default_rng(2024)
    for _ in range(20):
        taps = rng.standard_normal((10, d, p))
        taps /= np.linalg.norm(taps)
        dK = np.tensordot(np.exp(-1j * np.outer(omegas, np.arange(10))), taps, axes=(1, 0))
        j_pert = dual_objective(K_dr.K.values + eps * dK)
        assert j_pert >= j0 - 1e-8


def test_finite_horizon_dual_oracle(ctx_2state, gro_2state):
    sol = drro.solve_gamma_star(ctx_2state, 1.0, gamma_ro_est=gro_2state)
    value = sol.gamma_star * (1.0 - 1.0) + sol.gamma_star * float(
        np.mean(1.0 / (1.0 - sol.regret_values / sol.gamma_star))
    )
    oracle_value, _ = toeplitz_dual_value(sol.regret_values, 1.0, 200)
    assert abs(oracle_value - value) <= 5e-3 * abs(value)


def test_impulse_response_constant():
    grid = FrequencyGrid(8)
    K = ControllerSamples(
        K=GridSamples(grid, np.full((grid.N, 1, 1), 0.75, dtype=complex)), provenance="imported"
    )
    taps, tail = impulse_response(K, 4)
    assert abs(taps[0, 0, 0] - 0.75) < 1e-14
    assert np.max(np.abs(taps[0, 0, 1:])) < 1e-14
    assert tail < 1e-20


def test_impulse_response_delay():
    grid = FrequencyGrid(8)
    vals = np.exp(-1j * grid.omegas)[:, None, None]
    K = ControllerSamples(K=GridSamples(grid, vals), provenance="imported")
    taps, _ = impulse_response(K, 4)
    assert abs(taps[0, 0, 1] - 1.0) < 1e-12
    assert abs(taps[0, 0, 0]) < 1e-12
    assert np.max(np.abs(taps[0, 0, 2:])) < 1e-12


def test_impulse_response_decay(ctx_2state, gro_2state):
    _, K = ctx_2state.synthesize(2.0 * gro_2state)
    _, tail = impulse_response(K, 512)
    assert tail < 1e-6
