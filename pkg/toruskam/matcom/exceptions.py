class MatcomException(Exception):
    """Base exception class for commuting-matrix algebra errors."""

    pass


class NotCommuting(MatcomException):
    """
    Exception raised when a family of matrices fails the pairwise commutation check.

    Attributes:
        defect (float): Largest relative commutator norm found.
        pair (tuple[int, int] | None): Indices of the offending pair.
    """

    def __init__(self, message: str | None = None, defect: float = 0.0, pair: tuple[int, int] | None = None):
        super().__init__(message)
        self.defect = defect
        self.pair = pair


class NumericalBreakdown(MatcomException):
    """Exception raised when a decomposition cannot be completed within tolerance."""

    pass


class SingularMatrix(MatcomException):
    """Exception raised when a logarithm is requested for a (numerically) singular matrix."""

    pass


class NotSingleEigenvalue(MatcomException):
    """Exception raised when a triangular block carries more than one eigenvalue."""

    pass
