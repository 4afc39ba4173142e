from .exceptions import CohomologyException, IncompatibleRHS, ResonantDivisor
from .operators import (
    aligned_coefficients,
    apply_L,
    commutation_defect,
    commutator_jet,
    compatibility_check,
    divisor_multipliers,
    max_commutation_defect,
)
from .solver import CohomSolveReport, coefficient_bound_violations, solve
