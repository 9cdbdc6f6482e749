"""Classical boundary-driven exclusion and zero-range processes."""
from .generator import (
    NonUniqueStationaryState,
    StateSpaceTooLarge,
    build_generator_matrix,
    enumerate_states,
    marginals,
    product_vector,
    stationary_distribution,
    total_variation,
)
from .model import (
    SEP,
    ZRP,
    ClassicalModelSpec,
    Event,
    Trajectory,
    apply_event,
    event_rates,
    simulate,
    trajectory_rng,
    two_point_reservoir,
    unit_rate,
)
from .oracles import (
    OracleError,
    SepMoments,
    ZrpProductMeasure,
    sep_mean_profile,
    sep_moment_oracle,
    zrp_fugacity,
    zrp_product_measure,
)
from .sampler import EnsembleSamples, product_initial, sample_ensemble
from .stats import CovarianceEstimate, InsufficientBatches, batch_estimate, estimate_statistics
