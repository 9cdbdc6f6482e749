"""Quantum Lindblad extensions of the classical lattice gases."""
from .fock import (
    BOSON,
    FERMION,
    FockSpace,
    bounded_boson_ops,
    build_basis,
    gauge_automorphism,
    gauge_average,
    gauge_unitary,
    ladder_ops,
)
from .lindblad import (
    LindbladModel,
    StationaryResult,
    ToleranceBreach,
    assemble_lindblad,
    check_classical_restriction,
    check_density_matrix,
    check_gauge_covariance,
    classical_stationary,
    commutant_dimension,
    diagonal_leak,
    evolve,
    heisenberg_generator,
    heisenberg_superoperator,
    lift_state,
    schrodinger_generator,
    schrodinger_superoperator,
    stationary_state,
)
