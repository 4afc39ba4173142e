class LatticeException(Exception):
    """Base exception class for lattice and domain geometry errors."""

    pass


class SingularLattice(LatticeException):
    """
    Exception raised when the imaginary part of the period matrix is not invertible.

    Attributes:
        det (float): Absolute determinant of Im e_prime.
    """

    def __init__(self, message: str | None = None, det: float = 0.0):
        super().__init__(message)
        self.det = det
