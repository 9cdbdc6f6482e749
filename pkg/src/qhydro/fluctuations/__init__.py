"""Fluctuation field estimators, predictions, OU reference process and hypothesis tests."""
from .field import (
    EMPIRICAL,
    EXACT,
    FluctuationField,
    MeanPolicyError,
    dynamic_covariance,
    exact_mean_occupation,
    lagged_difference,
    smear,
    static_covariance,
)
from .hypotheses import (
    HypothesisRow,
    adjoint_name,
    chaoticity_test,
    check_resolution,
    local_equilibrium_test,
    lstar_name,
    monotone_within_errors,
    regression_test,
    w_increments,
    write_report,
)
from .ou import OUPaths, OUSpec, lyapunov_covariance, ou_simulate, ou_spec, stable_step
from .prediction import (
    StaticPrediction,
    green,
    greens_pairing,
    long_range_kernel,
    predicted_static_covariance,
    stationary_density,
)
from .series import FieldSeries, SampledFunction, lattice_series
from .testfunctions import TestFunction, bump, catalogue, inner, normalized_bump, sine
