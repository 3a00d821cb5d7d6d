"""Dual-parameter searches: the ambiguity-radius equation and the minimax bound.

For a fixed regret spectrum C the dual parameter solves

    mean_omega ((1 - C(omega)/gamma)^(-1) - 1)^2 = r^2,

whose left side is continuous, strictly decreasing in gamma on
(sup C, infinity), and vanishes as gamma -> infinity; root finding is safe
bisection/Brent.  When the controller itself depends on gamma (the synthesis
path), each residual evaluation re-synthesizes at the trial gamma, warm
starting the fixed point from the previous trial.

The minimax level gamma_ro (the infimum of feasible dual parameters) is
estimated by bisecting the feasibility predicate "the fixed point converges
and the resulting spectrum stays below gamma"; the supremum of the
nominal-optimal controller's regret spectrum provides the initial feasible
upper end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .context import PlantContext
from .errors import (
    BracketFailure,
    DimensionMismatch,
    GammaBelowSpectrum,
    GammaInfeasible,
    ImaginaryLeak,
    MaxItersExceeded,
    NumericalBreakdown,
)
from .synthesis import ControllerSamples, SynthesisState

__all__ = [
    "RadiusSpec",
    "GammaSolution",
    "wasserstein_residual",
    "solve_gamma_for_spectrum",
    "solve_gamma_star",
    "estimate_gamma_ro",
]

DEGENERATE_SUP = 1e-13


@dataclass(frozen=True)
class RadiusSpec:
    """Per-step transport-ball radius for the ambiguity set."""

    r: float

    def __post_init__(self):
        if not (self.r > 0.0):
            raise DimensionMismatch("radius r must be positive")


def _radius(r) -> float:
    return float(r.r) if isinstance(r, RadiusSpec) else float(r)


def _spectrum_values(C) -> np.ndarray:
    vals = np.asarray(getattr(C, "values", C), dtype=float)
    if vals.ndim != 1:
        raise DimensionMismatch("regret spectrum must be a 1-d sample array")
    return vals


def wasserstein_residual(C, gamma: float) -> float:
    """Grid-mean of ((1 - C/gamma)^(-1) - 1)^2; strictly decreasing in gamma."""
    vals = _spectrum_values(C)
    if gamma <= float(np.max(vals, initial=0.0)):
        raise GammaBelowSpectrum(
            f"gamma={gamma:.6g} does not dominate the spectrum sup {np.max(vals):.6g}"
        )
    return float(np.mean((1.0 / (1.0 - vals / gamma) - 1.0) ** 2))


def solve_gamma_for_spectrum(C, r) -> float:
    """gamma solving the radius equation for a fixed spectrum; inf when C = 0."""
    vals = _spectrum_values(C)
    r = _radius(r)
    sup = float(np.max(vals, initial=0.0))
    if sup <= DEGENERATE_SUP:
        return np.inf

    def f(g):
        return wasserstein_residual(vals, g) - r * r

    lo = sup * (1.0 + 1e-12)
    hi = max(2.0 * sup, sup * (1.0 + r) / r)
    doublings = 0
    while f(hi) > 0.0:
        hi *= 2.0
        doublings += 1
        if doublings > 200:
            raise BracketFailure("radius equation has no root below overflow range")
    if f(lo) <= 0.0:
        # Residual already below target arbitrarily close to sup C: the root
        # is pinned at the spectrum edge within floating-point resolution.
        return lo
    return float(brentq(f, lo, hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps))


@dataclass(frozen=True)
class GammaSolution:
    """Result of the synthesis-in-the-loop radius-equation solve."""

    gamma_star: float
    residual: float
    synthesis: SynthesisState
    controller: ControllerSamples
    regret_values: np.ndarray = field(repr=False)
    bracket_history: list = field(repr=False)
    gamma_ro_estimate: float


_PROBE_FAILURES = (MaxItersExceeded, GammaInfeasible, NumericalBreakdown, ImaginaryLeak)


def solve_gamma_star(
    ctx: PlantContext,
    r,
    *,
    gamma_ro_est: float | None = None,
    tol_resid: float = 1e-8,
    fp_tol: float = 1e-9,
    max_iters: int = 2000,
) -> GammaSolution:
    """Solve the radius equation along the synthesis path.

    Phase 1 brackets and bisects with cheap warm-started, uncertified trial
    syntheses.  Phase 2 polishes the root with cold-started, certified
    evaluations (deterministic in gamma, so the residual can be driven to
    tolerance even where it is stiff, i.e. for large radii just above the
    feasibility bound).  Trial failures are treated as "gamma too small" and
    tighten the lower bracket end.
    """
    r = _radius(r)
    if gamma_ro_est is None:
        gamma_ro_est = estimate_gamma_ro(ctx, fp_tol=fp_tol)
    if ctx.h2_sup_regret() <= DEGENERATE_SUP:
        raise BracketFailure(
            "regret spectrum is identically zero; the radius equation has no solution"
        )

    history: list[tuple[float, float]] = []
    warm = None

    def evaluate_fast(g):
        nonlocal warm
        state, controller = ctx.synthesize(
            g, bbar0=warm, fp_tol=fp_tol, max_iters=max_iters, enforce_certificate=False
        )
        warm = state.Bbar
        resid = wasserstein_residual(ctx.regret_values(controller), g) - r * r
        history.append((g, resid))
        return resid

    glo = gamma_ro_est * (1.0 + 1e-6)
    ghi = 10.0 * glo
    while True:
        try:
            if evaluate_fast(ghi) < 0.0:
                break
        except _PROBE_FAILURES:
            pass
        ghi *= 2.0
        if ghi > 1e15:
            raise BracketFailure(f"no feasible gamma with residual below r^2={r * r:.3e}")

    for _ in range(200):
        if (ghi - glo) <= 1e-3 * ghi:
            break
        mid = 0.5 * (glo + ghi)
        try:
            resid = evaluate_fast(mid)
        except _PROBE_FAILURES:
            glo = mid
            continue
        if resid > 0.0:
            glo = mid
        else:
            ghi = mid

    solution = _polish_certified(
        ctx, r, glo, ghi, history, fp_tol=fp_tol, max_iters=max_iters, tol_resid=tol_resid
    )
    if solution is None:
        raise BracketFailure("no certified synthesis succeeded inside the localized bracket")
    gamma_star, state, controller, C, resid = solution
    if abs(resid) > 10.0 * tol_resid:
        raise BracketFailure(
            f"radius-equation residual {resid:.3e} did not reach tolerance {tol_resid:.0e}"
        )
    return GammaSolution(
        gamma_star=gamma_star,
        residual=resid,
        synthesis=state,
        controller=controller,
        regret_values=C,
        bracket_history=history,
        gamma_ro_estimate=gamma_ro_est,
    )


def _polish_certified(ctx, r, glo, ghi, history, *, fp_tol, max_iters, tol_resid):
    """Guarded secant on the certified, cold-started residual inside [glo, ghi].

    Cold starts make the residual an exactly reproducible function of gamma;
    re-running the returned solution from scratch therefore reproduces its
    residual bit for bit.
    """
    cert_tol = min(fp_tol, 1e-11)
    cert_iters = max(8 * max_iters, 20000)

    def evaluate(g):
        state, controller = _certified_synthesis(ctx, g, fp_tol=cert_tol, max_iters=cert_iters)
        C = ctx.regret_values(controller)
        resid = wasserstein_residual(C, g) - r * r
        history.append((g, resid))
        return (g, state, controller, C, resid)

    pts = []
    for g in (ghi, 0.5 * (glo + ghi)):
        try:
            pts.append(evaluate(g))
        except _PROBE_FAILURES:
            pass
    best = min(pts, key=lambda pt: abs(pt[4]), default=None)
    if best is None:
        return None
    lo_r, hi_r = None, None  # residuals at certified bracket ends
    for pt in pts:
        if pt[4] > 0.0 and (lo_r is None or pt[0] > glo):
            glo, lo_r = pt[0], pt[4]
        if pt[4] < 0.0 and (hi_r is None or pt[0] < ghi):
            ghi, hi_r = pt[0], pt[4]

    for _ in range(40):
        if abs(best[4]) <= tol_resid or (ghi - glo) <= 64.0 * np.finfo(float).eps * ghi:
            break
        if len(pts) >= 2 and pts[-1][4] != pts[-2][4]:
            g1, r1 = pts[-1][0], pts[-1][4]
            g0, r0 = pts[-2][0], pts[-2][4]
            g_next = g1 - r1 * (g1 - g0) / (r1 - r0)
        else:
            g_next = 0.5 * (glo + ghi)
        margin = 0.05 * (ghi - glo)
        if not (glo + margin * 1e-6 < g_next < ghi - margin * 1e-6):
            g_next = 0.5 * (glo + ghi)
        try:
            pt = evaluate(g_next)
        except _PROBE_FAILURES:
            glo = g_next
            continue
        pts.append(pt)
        if abs(pt[4]) < abs(best[4]):
            best = pt
        if pt[4] > 0.0:
            glo = pt[0]
        else:
            ghi = pt[0]
    return best


def _certified_synthesis(ctx: PlantContext, gamma: float, *, fp_tol, max_iters, bbar0=None):
    """Synthesis with the stationarity certificate, tightening precision as needed.

    Near the feasibility boundary the fixed point contracts slowly and the
    certificate requires a step tolerance well below the search default; the
    ladder retries with tighter tolerance before giving up.
    """
    ladder = [(fp_tol, max_iters), (max(fp_tol * 1e-2, 1e-13), 4 * max_iters)]
    last = None
    for ft, mi in ladder:
        try:
            return ctx.synthesize(gamma, bbar0=bbar0, fp_tol=ft, max_iters=mi)
        except NumericalBreakdown as exc:
            last = exc
    raise last


def estimate_gamma_ro(
    ctx: PlantContext,
    *,
    rel_width: float = 1e-4,
    fp_tol: float = 1e-7,
    probe_max_iters: int = 2000,
    use_cache: bool = True,
) -> float:
    """Infimum of feasible dual parameters, located by feasibility bisection.

    A trial gamma is feasible when the fixed point converges and the
    synthesized controller passes its causality and spectral-dominance
    checks.  Returns the smallest verified-feasible gamma once the bracket's
    relative width drops below ``rel_width``; 0.0 for a zero regret spectrum.
    """
    if use_cache and "gamma_ro" in ctx.cache:
        return ctx.cache["gamma_ro"]

    sup_h2 = ctx.h2_sup_regret()
    if sup_h2 <= DEGENERATE_SUP:
        ctx.cache["gamma_ro"] = 0.0
        return 0.0

    warm = None

    def feasible(g):
        nonlocal warm
        try:
            state, _ = ctx.synthesize(
                g,
                bbar0=warm,
                fp_tol=max(fp_tol, 1e-9),
                max_iters=probe_max_iters,
                enforce_certificate=False,
            )
        except _PROBE_FAILURES:
            return False
        warm = state.Bbar
        return True

    ghi = sup_h2 * (1.0 + 1e-6)
    doublings = 0
    while not feasible(ghi):
        ghi *= 2.0
        doublings += 1
        if doublings > 60:
            raise BracketFailure("no feasible gamma found above the nominal-optimal bound")
    glo = 0.0
    while (ghi - glo) > rel_width * ghi:
        mid = 0.5 * (glo + ghi)
        if feasible(mid):
            ghi = mid
        else:
            glo = mid
    if use_cache:
        ctx.cache["gamma_ro"] = ghi
    return ghi
