"""Plant description, frequency grid, and sampled transfer-function containers.

All frequency-domain objects in this package are sampled on a uniform grid of
``N = 2**k`` points on the unit circle and stored as ``(N, rows, cols)``
complex arrays.  Transfer functions use negative powers of ``e^{j omega}`` for
causal taps: a causal object has all of its inverse-DFT energy at lags
``t >= 0`` (array indices ``0 .. N/2``), a strictly anticausal one at lags
``t < 0`` (indices ``N/2+1 .. N-1``).

State weights are folded in once: downstream modules always see the maps
between the weighted state/input signals and the raw scalar disturbance,

    F(e^{j omega}) = Q^(1/2) (e^{j omega} I - A)^(-1) B_u R^(-1/2)
    G(e^{j omega}) = Q^(1/2) (e^{j omega} I - A)^(-1) B_w

Both are strictly causal; the disturbance sample that drives the state update
at step t is known to the controller when u_t is chosen (full information).
This alignment is pinned by the causal/anticausal decomposition residual
check in :mod:`drro.riccati`, which fails loudly on any convention error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DisturbanceNotScalar,
    NotStabilizable,
    ParseError,
    SingularResolvent,
)

__all__ = [
    "FrequencyGrid",
    "GridSamples",
    "PlantModel",
    "WeightedPlant",
    "load_plant",
    "plant_from_dict",
    "eval_plant_responses",
    "pd_sqrt",
    "causal_leak",
    "anticausal_leak",
    "lag_coefficients",
    "conjugate_symmetry_error",
]


def pd_sqrt(M, clamp=1e-14, clamp_rel_tol=1e-10):
    """Symmetric positive-definite square root via eigendecomposition.

    Eigenvalues are clamped below at ``clamp``; if the clamping changes the
    matrix by more than ``clamp_rel_tol`` relative, the input was not usably
    positive definite and a ``DimensionMismatch`` is raised.
    """
    M = np.asarray(M, dtype=float)
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    w_cl = np.maximum(w, clamp)
    if np.max(np.abs(w_cl - w)) > clamp_rel_tol * max(clamp, np.max(np.abs(w))):
        raise DimensionMismatch("matrix is not positive definite")
    return (V * np.sqrt(w_cl)) @ V.T


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid of ``N = 2**k`` angles ``omega_n = 2 pi n / N`` on [0, 2 pi)."""

    k: int
    omegas: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not (2 <= self.k <= 26):
            raise DimensionMismatch(f"grid exponent k={self.k} outside supported range [2, 26]")
        if self.omegas is None:
            object.__setattr__(self, "omegas", 2.0 * np.pi * np.arange(self.N) / self.N)
        self.omegas.setflags(write=False)

    @property
    def N(self) -> int:
        return 1 << self.k

    @property
    def z(self) -> np.ndarray:
        """Unit-circle points ``e^{j omega_n}``."""
        return np.exp(1j * self.omegas)


def _check_same_grid(a: FrequencyGrid, b: FrequencyGrid):
    from .errors import GridMismatch

    if a.k != b.k:
        raise GridMismatch(f"grids differ: k={a.k} vs k={b.k}")


@dataclass(frozen=True)
class GridSamples:
    """Per-frequency complex matrix samples of a transfer object."""

    grid: FrequencyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 3 or v.shape[0] != self.grid.N:
            raise DimensionMismatch(
                f"GridSamples values must have shape (N, rows, cols) with N={self.grid.N}, got {v.shape}"
            )
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.values.shape[1]

    @property
    def cols(self) -> int:
        return self.values.shape[2]

    def __matmul__(self, other: "GridSamples") -> "GridSamples":
        _check_same_grid(self.grid, other.grid)
        return GridSamples(self.grid, self.values @ other.values)

    def __sub__(self, other: "GridSamples") -> "GridSamples":
        _check_same_grid(self.grid, other.grid)
        return GridSamples(self.grid, self.values - other.values)


def lag_coefficients(values: np.ndarray) -> np.ndarray:
    """Inverse-DFT tap coefficients; index t is lag t for t <= N/2, lag t-N above."""
    return np.fft.ifft(np.asarray(values), axis=0)


def _tap_energy(coeffs: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(coeffs.reshape(coeffs.shape[0], -1)) ** 2, axis=1)


def causal_leak(values: np.ndarray) -> float:
    """Relative negative-lag energy of a sampled transfer object.

    Zero for an exactly causal object; defined as
    ``sqrt(sum_{t<0} |x_t|^2 / sum_t |x_t|^2)``.
    """
    e = _tap_energy(lag_coefficients(values))
    N = e.shape[0]
    tot = float(np.sum(e))
    if tot <= 0.0:
        return 0.0
    return float(np.sqrt(np.sum(e[N // 2 + 1 :]) / tot))


def anticausal_leak(values: np.ndarray) -> float:
    """Relative nonnegative-lag energy; zero for a strictly anticausal object."""
    e = _tap_energy(lag_coefficients(values))
    N = e.shape[0]
    tot = float(np.sum(e))
    if tot <= 0.0:
        return 0.0
    return float(np.sqrt(np.sum(e[: N // 2 + 1]) / tot))


def conjugate_symmetry_error(values: np.ndarray) -> float:
    """Max deviation from X(2 pi - omega) = conj(X(omega)) over the grid."""
    v = np.asarray(values)
    mirrored = np.conj(np.roll(v[::-1], 1, axis=0))
    return float(np.max(np.abs(v - mirrored)))


def _as_matrix(name, raw):
    try:
        M = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"matrix {name!r} is not numeric: {exc}") from exc
    if M.ndim != 2:
        raise ParseError(f"matrix {name!r} must be a rectangular 2-d array, got ndim={M.ndim}")
    if not np.all(np.isfinite(M)):
        raise ParseError(f"matrix {name!r} contains non-finite entries")
    return M


def _pbh_stabilizable(A, B, tol=1e-9) -> bool:
    """PBH test: every eigenvalue of A on or outside the unit circle is controllable."""
    n = A.shape[0]
    scale = max(1.0, float(np.linalg.norm(A)))
    for lam in np.linalg.eigvals(A):
        if abs(lam) < 1.0 - tol:
            continue
        pencil = np.hstack([lam * np.eye(n) - A, B])
        if np.linalg.svd(pencil, compute_uv=False)[-1] <= tol * scale:
            return False
    return True


@dataclass(frozen=True)
class PlantModel:
    """Discrete-time LTI plant x_{t+1} = A x_t + B_u u_t + B_w w_{t+1} with quadratic weights."""

    A: np.ndarray
    B_u: np.ndarray
    B_w: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = _as_matrix("A", self.A)
        B_u = _as_matrix("B_u", self.B_u)
        B_w = _as_matrix("B_w", self.B_w)
        Q = _as_matrix("Q", self.Q)
        R = _as_matrix("R", self.R)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B_u.shape[0] != n or B_u.shape[1] < 1:
            raise DimensionMismatch(f"B_u must be n x d with d >= 1, got {B_u.shape}")
        if B_w.shape[0] != n:
            raise DimensionMismatch(f"B_w must have n={n} rows, got {B_w.shape}")
        if B_w.shape[1] != 1:
            raise DisturbanceNotScalar(f"B_w must have exactly one column, got {B_w.shape[1]}")
        if Q.shape != (n, n):
            raise DimensionMismatch(f"Q must be {n} x {n}, got {Q.shape}")
        d = B_u.shape[1]
        if R.shape != (d, d):
            raise DimensionMismatch(f"R must be {d} x {d}, got {R.shape}")
        for name, M in (("Q", Q), ("R", R)):
            if np.max(np.abs(M - M.T)) > 1e-10 * max(1.0, np.max(np.abs(M))):
                raise DimensionMismatch(f"{name} must be symmetric")
            if np.min(np.linalg.eigvalsh(0.5 * (M + M.T))) <= 0.0:
                raise DimensionMismatch(f"{name} must be positive definite")
        if not _pbh_stabilizable(A, B_u):
            raise NotStabilizable("(A, B_u) is not stabilizable")
        if not _pbh_stabilizable(A, B_w):
            raise NotStabilizable("(A, B_w) is not stabilizable")
        for name, M in (("A", A), ("B_u", B_u), ("B_w", B_w), ("Q", Q), ("R", R)):
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.B_u.shape[1]

    @property
    def p(self) -> int:
        return self.B_w.shape[1]

    def content_hash(self) -> str:
        """Stable hash of the plant matrices, for cache invalidation."""
        import hashlib

        payload = json.dumps(
            {name: getattr(self, name).tolist() for name in ("A", "B_u", "B_w", "Q", "R")},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class WeightedPlant:
    """Plant plus its weight square roots; all transfer objects live in weighted coordinates."""

    plant: PlantModel
    sqrtQ: np.ndarray
    sqrtR: np.ndarray
    invSqrtR: np.ndarray

    @classmethod
    def from_plant(cls, plant: PlantModel) -> "WeightedPlant":
        sqrtQ = pd_sqrt(plant.Q)
        sqrtR = pd_sqrt(plant.R)
        for M, target, name in ((sqrtQ, plant.Q, "Q"), (sqrtR, plant.R, "R")):
            err = np.linalg.norm(M @ M - target) / max(1e-300, np.linalg.norm(target))
            if err > 1e-12:
                raise DimensionMismatch(f"square root of {name} inaccurate: rel err {err:.2e}")
        return cls(plant, sqrtQ, sqrtR, np.linalg.inv(sqrtR))


def load_plant(source) -> PlantModel:
    """Load and validate a plant from a JSON file with keys A, B_u, B_w, Q, R.

    ``source`` may be a path or an open file object.  Arrays are nested
    rectangular lists, row-major.
    """
    try:
        if hasattr(source, "read"):
            raw = json.load(source)
        else:
            with open(source, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ParseError(f"plant file not found: {source}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot parse plant file {source}: {exc}") from exc
    return plant_from_dict(raw)


def plant_from_dict(raw: dict) -> PlantModel:
    if not isinstance(raw, dict):
        raise ParseError("plant file must contain a JSON object")
    missing = [k for k in ("A", "B_u", "B_w", "Q", "R") if k not in raw]
    if missing:
        raise ParseError(f"plant file missing keys: {', '.join(missing)}")
    return PlantModel(
        A=_as_matrix("A", raw["A"]),
        B_u=_as_matrix("B_u", raw["B_u"]),
        B_w=_as_matrix("B_w", raw["B_w"]),
        Q=_as_matrix("Q", raw["Q"]),
        R=_as_matrix("R", raw["R"]),
    )


def batched_resolvent(z: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Samples of (z I - A)^(-1) B for every z, shape (N, n, B.cols).

    Raises ``SingularResolvent`` when some z is numerically an eigenvalue of A.
    """
    n = A.shape[0]
    eigs = np.linalg.eigvals(A)
    gap = np.min(np.abs(z[:, None] - eigs[None, :]), axis=1)
    bad = np.nonzero(gap < 1e-12)[0]
    if bad.size:
        raise SingularResolvent(
            f"e^(j omega) I - A singular near omega index {int(bad[0])}"
        )
    lhs = z[:, None, None] * np.eye(n) - A
    rhs = np.broadcast_to(B, (z.shape[0],) + B.shape)
    return np.linalg.solve(lhs, rhs)


def eval_plant_responses(wp: WeightedPlant, grid: FrequencyGrid):
    """Sampled weighted responses (F, G) of the plant on the grid.

    F maps the weighted input to the weighted state; G maps the scalar
    disturbance to the weighted state.  Both are strictly causal under the
    disturbance alignment documented in the module docstring.
    """
    p = wp.plant
    z = grid.z
    res = batched_resolvent(z, p.A, np.hstack([p.B_u, p.B_w]))
    F = wp.sqrtQ @ res[:, :, : p.d] @ wp.invSqrtR
    G = wp.sqrtQ @ res[:, :, p.d :]
    return GridSamples(grid, F), GridSamples(grid, G)


def write_grid_samples_csv(samples: GridSamples, path):
    """CSV export: columns omega, re(i,j), im(i,j) in row-major matrix order."""
    import csv

    rows, cols = samples.rows, samples.cols
    header = ["omega"]
    for i in range(rows):
        for j in range(cols):
            header += [f"re{i}{j}", f"im{i}{j}"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx, om in enumerate(samples.grid.omegas):
            row = [format(om, ".17g")]
            for i in range(rows):
                for j in range(cols):
                    v = samples.values[idx, i, j]
                    row += [format(v.real, ".17g"), format(v.imag, ".17g")]
            writer.writerow(row)
