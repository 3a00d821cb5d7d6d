"""Comparison controllers: nominal-optimal, minimax-limit, and imported ones.

The nominal-optimal (Wiener) controller under the white unit-variance nominal
is the causal part of the benchmark in factored coordinates,
``K = DeltaInv Upart``; the minimax-limit controller is the synthesis output
with gamma pushed to a small offset above the estimated feasibility bound.
External controllers (e.g. an H-infinity design from another toolchain) are
ingested from cache files or state-space descriptions and resampled onto the
working grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .context import PlantContext
from .errors import CausalLeakExceeded, ParseError
from .gamma import estimate_gamma_ro
from .model import FrequencyGrid, GridSamples, causal_leak
from .riccati import CanonicalFactors
from .synthesis import ControllerSamples

__all__ = ["ImportedController", "h2_controller", "ro_limit_controller", "import_controller"]

IMPORT_CAUSAL_TOL = 1e-4


@dataclass(frozen=True)
class ImportedController:
    """Externally produced controller with its source record."""

    samples: ControllerSamples
    source: str


def h2_controller(factors: CanonicalFactors, grid: FrequencyGrid | None = None) -> ControllerSamples:
    """Nominal-optimal causal controller DeltaInv @ Upart on the working grid."""
    if grid is not None and grid.k != factors.Delta.grid.k:
        from .errors import GridMismatch

        raise GridMismatch("requested grid does not match the factors' grid")
    K_values = factors.DeltaInv.values @ factors.Upart.values
    leak = causal_leak(K_values)
    if leak > 1e-6:
        raise CausalLeakExceeded(f"nominal-optimal controller leak {leak:.2e}")
    return ControllerSamples(
        K=GridSamples(factors.Delta.grid, K_values), provenance="H2", gamma_used=None
    )


def ro_limit_controller(
    ctx: PlantContext,
    *,
    epsilon: float = 1e-3,
    gamma_ro_est: float | None = None,
    fp_tol: float = 1e-11,
    max_iters: int = 20000,
) -> ControllerSamples:
    """Synthesis at gamma = (1 + epsilon) x the estimated feasibility bound.

    This close to the bound the fixed point contracts slowly: meeting the
    stationarity certificate takes a much tighter step tolerance and a higher
    iteration cap than the interior defaults.  For a zero regret spectrum the
    zero controller is already minimax optimal and is returned directly.
    """
    if gamma_ro_est is None:
        gamma_ro_est = estimate_gamma_ro(ctx, fp_tol=max(fp_tol, 1e-7))
    if gamma_ro_est <= 0.0:
        zeros = np.zeros((ctx.grid.N, ctx.plant.d, ctx.plant.p), dtype=complex)
        return ControllerSamples(K=GridSamples(ctx.grid, zeros), provenance="RO", gamma_used=0.0)
    gamma = (1.0 + epsilon) * gamma_ro_est
    _, controller = ctx.synthesize(gamma, fp_tol=fp_tol, max_iters=max_iters)
    return ControllerSamples(K=controller.K, provenance="RO", gamma_used=gamma)


def import_controller(path, grid: FrequencyGrid, *, plant_hash: str | None = None) -> ImportedController:
    """Load a controller from a cache file or a state-space JSON description.

    Cache files must match the working grid exactly (``GridMismatch``
    otherwise) and, when ``plant_hash`` is supplied, the plant they were
    synthesized for.  State-space files with keys A_c, B_c, C_c, D_c are
    sampled onto the grid.  Imported samples must satisfy the (looser)
    external causality tolerance.
    """
    from . import io as drro_io

    path = str(path)
    if path.endswith(".npz"):
        meta, values = drro_io.load_controller_cache(path, expect_grid=grid)
        if plant_hash is not None and meta.get("plant_hash") not in (None, plant_hash):
            raise ParseError(
                f"cache {path} was synthesized for a different plant "
                f"({meta.get('plant_hash')[:12]}... != {plant_hash[:12]}...)"
            )
        provenance = meta.get("provenance", "imported")
        gamma_used = meta.get("gamma")
    else:
        values = drro_io.sample_state_space_controller(path, grid)
        provenance = "imported"
        gamma_used = None

    leak = causal_leak(values)
    if leak > IMPORT_CAUSAL_TOL:
        raise CausalLeakExceeded(
            f"imported controller causal leak {leak:.2e} exceeds {IMPORT_CAUSAL_TOL:.0e}"
        )
    samples = ControllerSamples(
        K=GridSamples(grid, values), provenance=provenance, gamma_used=gamma_used
    )
    return ImportedController(samples=samples, source=path)
