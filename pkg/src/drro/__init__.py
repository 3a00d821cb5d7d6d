"""Distributionally robust regret-optimal control in the frequency domain.

Synthesizes the infinite-horizon robust-regret controller of a discrete-time
LTI plant with a scalar disturbance channel via a fixed-point iteration over
unit-circle samples, and evaluates arbitrary controllers' worst-case expected
regret over transport-ball ambiguity sets.
"""

from .baselines import ImportedController, h2_controller, import_controller, ro_limit_controller
from .context import PlantContext, prepare_plant
from .errors import (
    BracketFailure,
    CausalLeakExceeded,
    DimensionMismatch,
    DisturbanceNotScalar,
    DrroError,
    FactorizationIdentityViolated,
    GammaBelowSpectrum,
    GammaInfeasible,
    GridMismatch,
    IllConditionedSpectrum,
    ImaginaryLeak,
    MaxItersExceeded,
    NoStabilizingSolution,
    NonFiniteSample,
    NonPositiveSpectrum,
    NotStabilizable,
    NumericalBreakdown,
    ParseError,
    SingularResolvent,
)
from .gamma import (
    GammaSolution,
    RadiusSpec,
    estimate_gamma_ro,
    solve_gamma_for_spectrum,
    solve_gamma_star,
    wasserstein_residual,
)
from .model import (
    FrequencyGrid,
    GridSamples,
    PlantModel,
    WeightedPlant,
    anticausal_leak,
    causal_leak,
    conjugate_symmetry_error,
    eval_plant_responses,
    lag_coefficients,
    load_plant,
    plant_from_dict,
)
from .regret import (
    RegretReport,
    RegretSpectrum,
    WorstCaseSpectrum,
    evaluate_controllers,
    expected_regret_under,
    monte_carlo_expected_regret,
    operator_norm_profile,
    regret_spectrum,
    worst_case_expected_regret,
)
from .riccati import (
    AdjointTriple,
    CanonicalFactors,
    RiccatiData,
    adjoint_triple,
    canonical_factors,
    solve_dare,
)
from .specfact import ScalarFactor, ScalarSpectrum, factor_residuals, spectral_factor_dft
from .synthesis import (
    ControllerSamples,
    SynthesisConfig,
    SynthesisKernels,
    SynthesisState,
    bbar_from_l,
    impulse_response,
    n_from_s,
    s_minus_from_bbar,
    synthesize,
)

__version__ = "0.1.0"
