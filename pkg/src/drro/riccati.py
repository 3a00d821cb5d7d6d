"""LQR Riccati data, canonical spectral factor, and the causal/anticausal split.

The stabilizing solution P of

    P = Q + A' P A - A' P B_u (R + B_u' P B_u)^(-1) B_u' P A

defines the gain ``K_lqr``, the closed loop ``A_K = A - B_u K_lqr``, and the
canonical factor of the weighted input spectrum,

    Delta(z) = (R + B_u' P B_u)^(1/2) (I + K_lqr (z I - A)^(-1) B_u) R^(-1/2),

which is causal, causally invertible, satisfies Delta* Delta = I + F* F, and
has a positive-definite limit at z -> inf.  The product of Delta with the
noncausal benchmark controller splits into a strictly anticausal part T and a
causal part U, both rational in the adjoint triple (Abar, Cbar, Dbar).  That
split is what makes the later fixed-point parametrization finite-dimensional,
and its residual doubles as a loud runtime check of every sign and alignment
convention in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    FactorizationIdentityViolated,
    NoStabilizingSolution,
)
from .model import (
    FrequencyGrid,
    GridSamples,
    WeightedPlant,
    batched_resolvent,
    eval_plant_responses,
    pd_sqrt,
)

__all__ = [
    "RiccatiData",
    "AdjointTriple",
    "CanonicalFactors",
    "solve_dare",
    "adjoint_triple",
    "canonical_factors",
]


@dataclass(frozen=True)
class RiccatiData:
    """Stabilizing Riccati solution and derived gains."""

    P: np.ndarray
    K_lqr: np.ndarray
    A_K: np.ndarray
    RBPB: np.ndarray
    sqrtRBPB: np.ndarray
    invSqrtRBPB: np.ndarray


@dataclass(frozen=True)
class AdjointTriple:
    """State-space data (Abar, Cbar, Dbar) of the anticausal part's adjoint system."""

    Abar: np.ndarray
    Cbar: np.ndarray
    Dbar: np.ndarray


@dataclass(frozen=True)
class CanonicalFactors:
    """Sampled canonical factor, its inverse, the noncausal benchmark, and its split."""

    Delta: GridSamples
    DeltaInv: GridSamples
    Kcirc: GridSamples
    Tpart: GridSamples
    Upart: GridSamples


def _dare_residual(P, A, B, Q, R):
    BP = B.T @ P
    return Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(R + BP @ B, BP @ A) - P


def _sda_iteration(A, B, Q, R, tol=1e-14, max_iters=200):
    """Structured doubling iteration; quadratically convergent for stabilizable pairs."""
    n = A.shape[0]
    Ak = A.copy()
    Gk = B @ np.linalg.solve(R, B.T)
    Hk = Q.copy()
    for _ in range(max_iters):
        W = np.eye(n) + Gk @ Hk
        try:
            WA = np.linalg.solve(W, Ak)
            WG = np.linalg.solve(W, Gk)
        except np.linalg.LinAlgError:
            return None
        An = Ak @ WA
        Gn = Gk + Ak @ WG @ Ak.T
        Hn = Hk + WA.T @ Hk @ Ak
        step = np.linalg.norm(Hn - Hk) / max(1.0, np.linalg.norm(Hk))
        Ak, Gk, Hk = An, Gn, Hn
        if step < tol:
            return 0.5 * (Hk + Hk.T)
    return None


def _fixed_point_iteration(A, B, Q, R, tol=1e-14, max_iters=200000):
    P = Q.copy()
    for _ in range(max_iters):
        BP = B.T @ P
        Pn = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(R + BP @ B, BP @ A)
        if np.linalg.norm(Pn - P) < tol * max(1.0, np.linalg.norm(P)):
            return 0.5 * (Pn + Pn.T)
        P = Pn
    return None


def solve_dare(wp: WeightedPlant) -> RiccatiData:
    """Stabilizing Riccati solution via doubling, with a direct fixed point as fallback."""
    p = wp.plant
    A, B, Q, R = p.A, p.B_u, p.Q, p.R
    if p.d < 1:
        raise DimensionMismatch("d >= 1 control inputs required")
    P = _sda_iteration(A, B, Q, R)
    if P is None:
        P = _fixed_point_iteration(A, B, Q, R)
    if P is None:
        raise NoStabilizingSolution("Riccati iteration did not converge")
    resid = np.linalg.norm(_dare_residual(P, A, B, Q, R))
    if resid > 1e-10 * max(1.0, np.linalg.norm(P)):
        raise NoStabilizingSolution(f"Riccati residual too large: {resid:.2e}")
    RBPB = R + B.T @ P @ B
    K_lqr = np.linalg.solve(RBPB, B.T @ P @ A)
    A_K = A - B @ K_lqr
    if np.max(np.abs(np.linalg.eigvals(A_K))) >= 1.0:
        raise NoStabilizingSolution("closed-loop matrix is not Schur stable")
    sqrtRBPB = pd_sqrt(RBPB)
    return RiccatiData(
        P=0.5 * (P + P.T),
        K_lqr=K_lqr,
        A_K=A_K,
        RBPB=RBPB,
        sqrtRBPB=sqrtRBPB,
        invSqrtRBPB=np.linalg.inv(sqrtRBPB),
    )


def adjoint_triple(rd: RiccatiData, wp: WeightedPlant) -> AdjointTriple:
    """Adjoint-system triple generating the strictly anticausal component."""
    p = wp.plant
    return AdjointTriple(
        Abar=rd.A_K.T.copy(),
        Cbar=-rd.invSqrtRBPB @ p.B_u.T,
        Dbar=rd.A_K.T @ rd.P @ p.B_w,
    )


def canonical_factors(
    rd: RiccatiData,
    wp: WeightedPlant,
    grid: FrequencyGrid,
    *,
    identity_tol=1e-6,
) -> CanonicalFactors:
    """Sampled Delta, Delta^(-1), noncausal benchmark Kcirc, and the T/U split.

    Verifies, over the whole grid:
      * Delta * DeltaInv = I,
      * Delta^* Delta = I + F^* F,
      * Delta Kcirc = Tpart + Upart (the convention-pinning residual).
    """
    p = wp.plant
    z = grid.z
    N = grid.N
    d = p.d

    F, G = eval_plant_responses(wp, grid)
    FH = np.conj(np.swapaxes(F.values, 1, 2))
    Kcirc = -np.linalg.solve(np.eye(d) + FH @ F.values, FH @ G.values)

    res_u = batched_resolvent(z, p.A, p.B_u)
    Delta = rd.sqrtRBPB @ (np.eye(d) + rd.K_lqr @ res_u) @ wp.invSqrtR
    res_k = batched_resolvent(z, rd.A_K, p.B_u)
    DeltaInv = wp.sqrtR @ (np.eye(d) - rd.K_lqr @ res_k) @ rd.invSqrtRBPB

    triple = adjoint_triple(rd, wp)
    Tpart = triple.Cbar @ batched_resolvent(np.conj(z), triple.Abar, triple.Dbar)
    res_w = batched_resolvent(z, p.A, p.B_w)
    Upart = triple.Cbar @ rd.P @ (p.A @ res_w + p.B_w)

    inv_err = np.max(np.abs(Delta @ DeltaInv - np.eye(d)))
    if inv_err > 1e-10:
        raise FactorizationIdentityViolated(f"Delta * DeltaInv != I: {inv_err:.2e}")
    spec = np.conj(np.swapaxes(Delta, 1, 2)) @ Delta
    target = np.eye(d) + FH @ F.values
    spec_err = np.max(np.abs(spec - target)) / max(1.0, np.max(np.abs(target)))
    if spec_err > 1e-8:
        raise FactorizationIdentityViolated(f"Delta* Delta != I + F* F: {spec_err:.2e}")
    split_err = np.max(np.abs(Delta @ Kcirc - Tpart - Upart))
    if split_err > identity_tol:
        raise FactorizationIdentityViolated(
            f"Delta Kcirc != Tpart + Upart: {split_err:.2e}; convention or Riccati error"
        )

    return CanonicalFactors(
        Delta=GridSamples(grid, Delta),
        DeltaInv=GridSamples(grid, DeltaInv),
        Kcirc=GridSamples(grid, Kcirc),
        Tpart=GridSamples(grid, Tpart),
        Upart=GridSamples(grid, Upart),
    )
