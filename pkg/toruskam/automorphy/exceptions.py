class AutomorphyException(Exception):
    """Base exception class for factor-of-automorphy errors."""

    pass


class NotHermitian(AutomorphyException):
    """Exception raised when a vertical generator expected to be Hermitian is not."""

    pass


class NonDiagonalFactor(AutomorphyException):
    """Exception raised when a factor must be diagonal to define a linear deck but is not."""

    pass
