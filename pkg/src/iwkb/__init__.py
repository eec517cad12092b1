"""Position-dependent reflection and transmission coefficients for 1-D waves.

The pointwise WKB machinery lives in :mod:`iwkb.core`, potentials in
:mod:`iwkb.potentials`, the piecewise integrable replacement in
:mod:`iwkb.piecewise` / :mod:`iwkb.fitting`, and the independent
transfer-matrix oracle in :mod:`iwkb.steps`.  scikit-learn style
estimator facades are in :mod:`iwkb.estimators`.
"""

__version__ = "0.1.0"

from .core import (
    BoundaryConstants,
    CoefficientProfile,
    coefficient_profile,
    coefficients_expanded,
    far_field_amplitudes,
    instantaneous_coefficients,
    matching_residual,
    modulated_amplitudes,
    normalization_h,
    solve_boundary_constants,
    solve_far_matching_constant,
    solve_inner_constant,
    solve_split_constant,
    validity_report,
    wavefunction,
    wavefunction_residual,
    wkb_far_field,
)
from .errors import (
    AmplitudeDomainError,
    ConfigError,
    ConvergenceError,
    DomainError,
    ExtrapolationError,
    FitError,
    ForbiddenRegionError,
    IWKBError,
    MatchingError,
    NormalizationError,
    SingularityError,
    TurningPointError,
)
from .fitting import FitReport, FitResult, fit_piecewise
from .piecewise import (
    ChainedEiconal,
    PiecewiseModel,
    Segment,
    chain_eiconal,
    eiconal_closed_form,
    eiconal_quadrature,
    eval_segment,
    kerr_dirac_model,
    local_wavenumber,
    model_from_text,
    model_to_text,
)
from .potentials import (
    REFERENCE_PARAMS,
    ConstantPotential,
    ExponentialPotential,
    KerrDiracPotential,
    PhysicalParams,
    QuadraticPotential,
    RectangularBarrier,
    TabulatedPotential,
    eval_potential,
    horizon_radius,
    inverse_tortoise,
    kerr_dirac_potential,
    sample_potential,
    tortoise_coordinate,
    tortoise_derivative,
)
from .steps import (
    ScatteringResult,
    StepPotential,
    converge_scatter,
    discretize_to_steps,
    transfer_matrix_scatter,
)

# the scikit-learn facades pull in sklearn; import them on first use so
# plain library/CLI runs stay light
_LAZY_ESTIMATORS = ("PiecewiseFitter", "IWKBProfiler", "TransferMatrixScatterer")


def __getattr__(name):
    if name in _LAZY_ESTIMATORS:
        from . import estimators

        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
