"""Exception hierarchy for the drro package.

Everything derives from :class:`DrroError` so callers can catch the whole
family at once.  The CLI maps subfamilies onto exit codes: configuration and
parsing problems, numerical failures, and infeasible dual parameters.
"""


class DrroError(Exception):
    """Base class for all drro errors."""


class ParseError(DrroError):
    """A plant, controller, or cache file could not be parsed."""


class DimensionMismatch(DrroError):
    """Matrix shapes are inconsistent with the declared dimensions."""


class DisturbanceNotScalar(DrroError):
    """The disturbance input matrix has more than one column."""


class NotStabilizable(DrroError):
    """(A, B) fails the PBH stabilizability test."""


class SingularResolvent(DrroError):
    """e^{j omega} I - A is numerically singular at a grid point."""


class NoStabilizingSolution(DrroError):
    """The Riccati iteration did not produce a stabilizing solution."""


class FactorizationIdentityViolated(DrroError):
    """A canonical-factor identity check failed beyond tolerance."""


class NonPositiveSpectrum(DrroError):
    """A scalar spectrum has a non-positive sample."""


class IllConditionedSpectrum(DrroError):
    """The dynamic range of a spectrum makes its log-factorization unsafe."""


class GridMismatch(DrroError):
    """Two sampled objects live on different frequency grids."""


class MaxItersExceeded(DrroError):
    """The fixed-point iteration hit its iteration cap.

    Carries the per-iteration step-norm ``history`` for diagnosis.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class GammaInfeasible(DrroError):
    """The requested dual parameter lies at or below the feasibility bound."""


class NumericalBreakdown(DrroError):
    """A numerical invariant was violated mid-computation."""


class ImaginaryLeak(DrroError):
    """A quantity that must be real carries too much imaginary part."""


class GammaBelowSpectrum(DrroError):
    """gamma does not dominate the regret spectrum's supremum."""


class BracketFailure(DrroError):
    """A root bracket for the dual-parameter search could not be established."""


class NonFiniteSample(DrroError):
    """A Monte Carlo rollout produced a non-finite sample."""


class CausalLeakExceeded(DrroError):
    """A controller's negative-lag energy exceeds its causality tolerance."""
