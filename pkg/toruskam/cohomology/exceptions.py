class CohomologyException(Exception):
    """Base exception class for cohomological equation errors."""

    pass


class ResonantDivisor(CohomologyException):
    """
    Exception raised when the solver meets a vanishing divisor against a nonzero right-hand side.

    Attributes:
        P (list[int]): Horizontal exponent of the offending coefficient.
        Q (list[int]): Vertical exponent of the offending coefficient.
        target (str): Component label, "h<i>" or "v<j>" (zero-based).
        value (float): Modulus of the divisor.
    """

    def __init__(
        self,
        message: str | None = None,
        P: list[int] | None = None,
        Q: list[int] | None = None,
        target: str | None = None,
        value: float = 0.0,
    ):
        super().__init__(message)
        self.P = P
        self.Q = Q
        self.target = target
        self.value = value

    def to_dict(self) -> dict:
        return {"P": self.P, "Q": self.Q, "target": self.target, "value": self.value}


class IncompatibleRHS(CohomologyException):
    """Exception raised when the right-hand sides violate the compatibility relations between generators."""

    pass
