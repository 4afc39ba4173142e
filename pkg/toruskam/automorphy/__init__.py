from .exceptions import AutomorphyException, NonDiagonalFactor, NotHermitian
from .factor import (
    ConstantFactor,
    VerticalFrame,
    diagonalize_vertical,
    equivalent_factor,
    generator_logs,
    lattice_point,
    linear_deck,
    log_of,
    rho_of,
    transported_value,
    trivialize_over_cylinder,
    vertical_eigenvalues,
)
