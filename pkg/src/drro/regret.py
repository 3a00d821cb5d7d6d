"""Regret spectra, worst-case expected regret, and time-domain validation.

For a scalar disturbance the regret operator of a controller K has the
per-frequency symbol

    C(omega) = || Delta(omega) (K(omega) - Kcirc(omega)) ||^2 >= 0,

and the worst-case expected regret over a transport ball of radius r around
the white unit-variance nominal is the dual value

    gamma* (r^2 - 1) + gamma* mean_omega (1 - C/gamma*)^(-1),

where gamma* solves the radius equation.  The maximizing disturbance is
Gaussian and stationary with power spectrum M*(omega) = (1 - C/gamma*)^(-2);
its transport budget mean((sqrt(M*) - 1)^2) saturates r^2, and the dual value
equals mean(C M*) (complementary slackness).  Both identities are exposed and
used as runtime cross-checks.

Monte Carlo validation rolls the plant against shaped Gaussian noise and
subtracts a per-trial clairvoyant cost obtained from the windowed DFT of the
same disturbance, so the regret estimate correlates the two costs and stays
tight for long horizons.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .context import PlantContext
from .errors import (
    DimensionMismatch,
    GridMismatch,
    NonFiniteSample,
    NumericalBreakdown,
)
from .gamma import DEGENERATE_SUP, RadiusSpec, _radius, solve_gamma_for_spectrum
from .model import FrequencyGrid, batched_resolvent
from .riccati import CanonicalFactors
from .specfact import ScalarSpectrum, spectral_factor_dft
from .synthesis import ControllerSamples

__all__ = [
    "RegretSpectrum",
    "WorstCaseSpectrum",
    "RegretReport",
    "regret_spectrum",
    "worst_case_expected_regret",
    "expected_regret_under",
    "operator_norm_profile",
    "monte_carlo_expected_regret",
    "evaluate_controllers",
]

NEGATIVITY_TOL = 1e-9


@dataclass(frozen=True)
class RegretSpectrum:
    """Nonnegative per-frequency regret values with cached supremum."""

    grid: FrequencyGrid
    values: np.ndarray = field(repr=False)
    sup: float = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise GridMismatch(f"expected {self.grid.N} samples, got {v.shape}")
        if np.min(v) < -NEGATIVITY_TOL:
            raise NumericalBreakdown(
                f"regret spectrum negative beyond roundoff: min={np.min(v):.3e}; "
                "noncausal-benchmark optimality violated"
            )
        v = np.maximum(v, 0.0)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sup", float(np.max(v)))
        v.setflags(write=False)


@dataclass(frozen=True)
class WorstCaseSpectrum:
    """Power spectrum of the regret-maximizing disturbance at the optimal gamma."""

    grid: FrequencyGrid
    M: np.ndarray = field(repr=False)
    gamma_star: float
    w2_budget: float


@dataclass(frozen=True)
class RegretReport:
    """One evaluation row: a controller's worst-case and nominal expected regret."""

    controller: str
    r: float
    gamma_star: float
    worst_case_expected_regret: float
    nominal_expected_regret: float
    profile: np.ndarray = field(repr=False)
    cross: dict = field(default_factory=dict)


def _factors_of(factors) -> CanonicalFactors:
    return factors.factors if isinstance(factors, PlantContext) else factors


def regret_spectrum(K: ControllerSamples, factors) -> RegretSpectrum:
    """Per-frequency regret symbol of a controller against the noncausal benchmark."""
    f = _factors_of(factors)
    if K.K.grid.k != f.Delta.grid.k:
        raise GridMismatch("controller and factors live on different grids")
    E = f.Delta.values @ (K.K.values - f.Kcirc.values)
    return RegretSpectrum(K.K.grid, np.sum(np.abs(E[:, :, 0]) ** 2, axis=1))


def worst_case_expected_regret(C: RegretSpectrum, r):
    """Worst-case expected regret of a fixed spectrum and the attaining disturbance.

    Returns ``(value, WorstCaseSpectrum)``.  A zero spectrum short-circuits to
    value 0 with the nominal (flat) disturbance spectrum.
    """
    r = _radius(r)
    if C.sup <= DEGENERATE_SUP:
        return 0.0, WorstCaseSpectrum(C.grid, np.ones(C.grid.N), np.inf, 0.0)
    g = solve_gamma_for_spectrum(C.values, r)
    rho = 1.0 / (1.0 - C.values / g)
    value = g * (r * r - 1.0) + g * float(np.mean(rho))
    M = rho**2
    w2 = float(np.mean((np.sqrt(M) - 1.0) ** 2))
    return value, WorstCaseSpectrum(C.grid, M, g, w2)


def expected_regret_under(C: RegretSpectrum, M) -> float:
    """Expected regret of C under a disturbance power spectrum M (grid mean of C*M)."""
    Mv = np.asarray(getattr(M, "M", getattr(M, "values", M)), dtype=float)
    if Mv.shape != C.values.shape:
        raise GridMismatch("spectrum shapes differ")
    if np.min(Mv) < 0.0:
        raise DimensionMismatch("disturbance power spectrum must be nonnegative")
    return float(np.mean(C.values * Mv))


def operator_norm_profile(K: ControllerSamples, ctx: PlantContext) -> np.ndarray:
    """Largest eigenvalue of T_K^* T_K per frequency (scalar disturbance: a norm)."""
    if K.K.grid.k != ctx.grid.k:
        raise GridMismatch("controller grid does not match context grid")
    top = ctx.F.values @ K.K.values + ctx.G.values
    return np.sum(np.abs(top[:, :, 0]) ** 2, axis=1) + np.sum(
        np.abs(K.K.values[:, :, 0]) ** 2, axis=1
    )


def _clairvoyant_sigma(ctx: PlantContext, horizon: int) -> np.ndarray:
    """Noncausal-benchmark closed-loop power gain at the horizon's DFT frequencies."""
    p = ctx.plant
    z = np.exp(2j * np.pi * np.arange(horizon) / horizon)
    res = batched_resolvent(z, p.A, np.hstack([p.B_u, p.B_w]))
    F = ctx.wp.sqrtQ @ res[:, :, : p.d] @ ctx.wp.invSqrtR
    G = ctx.wp.sqrtQ @ res[:, :, p.d :]
    FH = np.conj(np.swapaxes(F, 1, 2))
    Ko = -np.linalg.solve(np.eye(p.d) + FH @ F, FH @ G)
    closed = F @ Ko + G
    return np.sum(np.abs(closed[:, :, 0]) ** 2, axis=1) + np.sum(np.abs(Ko[:, :, 0]) ** 2, axis=1)


def _shaping_taps(M, grid: FrequencyGrid, lags: int) -> np.ndarray:
    if M is None:
        return np.array([1.0])
    if isinstance(M, WorstCaseSpectrum):
        Mv = M.M
    else:
        Mv = np.asarray(getattr(M, "values", M), dtype=float)
    if Mv.shape != (grid.N,):
        raise GridMismatch("disturbance spectrum must live on the context grid")
    if np.allclose(Mv, Mv[0]):
        return np.array([np.sqrt(Mv[0])])
    fac = spectral_factor_dft(ScalarSpectrum(grid, Mv))
    taps = np.fft.ifft(fac.values).real[: min(lags, grid.N // 2)]
    return taps


def monte_carlo_expected_regret(
    ctx: PlantContext,
    taps: np.ndarray,
    M,
    horizon: int,
    trials: int,
    seed: int,
    *,
    shaping_lags: int = 512,
    chunk: int = 2048,
):
    """Sample mean and standard error of the time-averaged regret of an FIR controller.

    ``taps`` is the (d, p, lags) impulse response of the controller in
    weighted input coordinates; ``M`` is the disturbance power spectrum on the
    context grid (``None`` for the white nominal).  Disturbances are shaped by
    the truncated causal factor of ``M``; each trial's clairvoyant cost comes
    from the Hann-windowed DFT of its own disturbance window, and a burn-in
    prefix long enough for both the controller FIR and the state transient is
    discarded.
    """
    p = ctx.plant
    taps = np.asarray(taps, dtype=float)
    if taps.ndim != 3 or taps.shape[0] != p.d or taps.shape[1] != p.p:
        raise DimensionMismatch(f"taps must have shape (d, p, lags), got {taps.shape}")
    k_t = np.transpose(taps[:, 0, :], (1, 0))  # (lags, d)
    lags = k_t.shape[0]
    ltaps = _shaping_taps(M, ctx.grid, shaping_lags)
    nl = ltaps.shape[0]
    burn = lags + nl + 4 * p.n
    L = burn + horizon

    sig0 = _clairvoyant_sigma(ctx, horizon)
    win = np.hanning(horizon)
    win_norm = float(np.sum(win**2))
    invSqrtR = ctx.wp.invSqrtR

    rng = np.random.default_rng(seed)
    samples = []
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        xi = rng.standard_normal((m, L + nl - 1))
        nfft = L + 2 * nl
        W = np.fft.irfft(
            np.fft.rfft(xi, n=nfft, axis=1) * np.fft.rfft(ltaps, n=nfft), n=nfft, axis=1
        )[:, nl - 1 : nl - 1 + L]
        nfft_u = L + lags
        U = np.empty((m, L, p.d))
        for j in range(p.d):
            U[:, :, j] = np.fft.irfft(
                np.fft.rfft(W, n=nfft_u, axis=1) * np.fft.rfft(k_t[:, j], n=nfft_u),
                n=nfft_u,
                axis=1,
            )[:, :L]
        U_raw = U @ invSqrtR.T

        x = np.zeros((m, p.n))
        cost = np.zeros(m)
        for s in range(L):
            u = U_raw[:, s, :]
            if s >= burn:
                cost += np.einsum("ij,jk,ik->i", x, p.Q, x) + np.einsum(
                    "ij,jk,ik->i", u, p.R, u
                )
            x = x @ p.A.T + u @ p.B_u.T + np.outer(W[:, s], p.B_w[:, 0])
        cost /= horizon

        w_win = W[:, burn : burn + horizon] * win
        spec = np.abs(np.fft.fft(w_win, axis=1)) ** 2
        clairvoyant = (spec @ sig0) / (horizon * win_norm)
        samples.append(cost - clairvoyant)
        done += m

    g = np.concatenate(samples)
    if not np.all(np.isfinite(g)):
        raise NonFiniteSample("Monte Carlo rollout produced a non-finite regret sample")
    return float(np.mean(g)), float(np.std(g, ddof=1) / np.sqrt(trials))


def evaluate_controllers(ctx: PlantContext, controllers: dict, r) -> list[RegretReport]:
    """Cross table: each controller under its own and every other worst case.

    ``controllers`` maps display names to :class:`ControllerSamples`.  Each
    report carries the controller's own-worst-case value, the nominal value,
    the operator-norm profile, and cross entries ``regret under <name>'s
    worst-case disturbance``.
    """
    r = _radius(r)
    spectra = {name: regret_spectrum(K, ctx) for name, K in controllers.items()}
    worst = {name: worst_case_expected_regret(C, r) for name, C in spectra.items()}
    reports = []
    for name, C in spectra.items():
        value, wcs = worst[name]
        cross = {
            other: expected_regret_under(C, worst[other][1].M) for other in spectra
        }
        reports.append(
            RegretReport(
                controller=name,
                r=r,
                gamma_star=wcs.gamma_star,
                worst_case_expected_regret=value,
                nominal_expected_regret=float(np.mean(C.values)),
                profile=operator_norm_profile(controllers[name], ctx),
                cross=cross,
            )
        )
    return reports
