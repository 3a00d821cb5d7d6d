"""Cepstral spectral factorization of a positive scalar spectrum sampled by DFT.

Given samples of a positive spectrum S(omega) on the ``N = 2**k`` grid, the
factor is built from the causal half of the log-spectrum's Fourier series:

    h_t = IDFT(log S)_t,   t = 0 .. N/2
    L_n = exp( h_0/2 + sum_{t=1}^{N/2-1} h_t e^{-j 2 pi n t / N} + (-1)^n h_{N/2}/2 )

The magnitude |L_n|^2 reproduces S(omega_n) exactly at the grid nodes (the
folded sum's real part is half the log-spectrum by symmetry); the genuine
discretization error lives in the phase and shows up as negative-lag leakage
of the factor, which decays rapidly as N grows.  Both magnitude mismatch and
causal leakage are exposed through :func:`factor_residuals`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, IllConditionedSpectrum, NonPositiveSpectrum, NumericalBreakdown
from .model import FrequencyGrid, causal_leak

__all__ = ["ScalarSpectrum", "ScalarFactor", "spectral_factor_dft", "factor_residuals"]


@dataclass(frozen=True)
class ScalarSpectrum:
    """Positive, even-symmetric scalar spectrum samples on a frequency grid."""

    grid: FrequencyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise GridMismatch(f"spectrum must have {self.grid.N} samples, got {v.shape}")
        if np.min(v) <= 0.0:
            raise NonPositiveSpectrum(f"spectrum has a non-positive sample: min={np.min(v):.3e}")
        sym = np.max(np.abs(v - np.roll(v[::-1], 1)))
        if sym > 1e-10 * max(1.0, np.max(v)):
            raise NumericalBreakdown(f"spectrum is not even-symmetric: {sym:.3e}")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)


@dataclass(frozen=True)
class ScalarFactor:
    """Unit-circle samples of a causal scalar spectral factor."""

    grid: FrequencyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.N,):
            raise GridMismatch(f"factor must have {self.grid.N} samples, got {v.shape}")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    def causal_leak(self) -> float:
        return causal_leak(self.values[:, None, None])


def _factor_samples(values: np.ndarray) -> np.ndarray:
    """Bare factorization core: log, fold the causal cepstrum half, exponentiate.

    No validation; callers on hot paths guarantee positivity themselves.
    """
    N = values.shape[0]
    ht = np.fft.ifft(np.log(values)).real
    folded = np.zeros(N, dtype=complex)
    folded[0] = 0.5 * ht[0]
    folded[1 : N // 2] = ht[1 : N // 2]
    folded[N // 2] = 0.5 * ht[N // 2]
    return np.exp(np.fft.fft(folded))


def spectral_factor_dft(spec: ScalarSpectrum, *, conditioning_guard=1e-12) -> ScalarFactor:
    """Factor a positive scalar spectrum so that |L|^2 = S with L causal.

    The lag-0 coefficient of the result is real and positive (canonical outer
    normalization); this is a property of the construction and is asserted,
    not re-imposed.
    """
    v = spec.values
    if np.min(v) / np.max(v) <= conditioning_guard:
        raise IllConditionedSpectrum(
            f"spectrum dynamic range {np.min(v) / np.max(v):.3e} below guard {conditioning_guard:.0e}"
        )
    h = np.fft.ifft(np.log(v))
    if np.max(np.abs(h.imag)) > 1e-8 * max(1.0, np.max(np.abs(h.real))):
        raise NumericalBreakdown("log-spectrum cepstrum is not real")
    L = _factor_samples(v)

    mag_err = np.max(np.abs(np.abs(L) ** 2 - v) / v)
    if mag_err > 1e-8:
        raise NumericalBreakdown(f"|L|^2 deviates from the spectrum: {mag_err:.2e}")
    lag0 = np.fft.ifft(L)[0]
    if not (lag0.real > 0.0 and abs(lag0.imag) <= 1e-8 * max(1.0, abs(lag0.real))):
        raise NumericalBreakdown(f"lag-0 coefficient not real positive: {lag0}")
    return ScalarFactor(spec.grid, L)


def factor_residuals(spec: ScalarSpectrum, fac: ScalarFactor):
    """Diagnostics (magnitude_err, causal_leak) of a factor against its spectrum.

    magnitude_err is the worst relative deviation of |L|^2 from the spectrum;
    causal_leak is the relative negative-lag tap energy of L.
    """
    if spec.grid.k != fac.grid.k:
        raise GridMismatch("spectrum and factor grids differ")
    mag_err = float(np.max(np.abs(np.abs(fac.values) ** 2 - spec.values) / spec.values))
    return mag_err, fac.causal_leak()
