from .exceptions import LatticeException, SingularLattice
from .lattice import (
    DomainSpec,
    Lattice,
    check_nonsingular,
    deck_eigenvalues,
    fourier_decay_factor,
    kappa,
    kappa0,
    log_sup_h_pow,
    parallelotope_vertices,
    sup_h_pow,
    support_function,
)
