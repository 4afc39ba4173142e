class KamException(Exception):
    """Base exception class for KAM iteration errors."""

    pass


class InvalidParams(KamException):
    """Exception raised when KAM parameters violate the smallness conditions on delta0."""

    pass


class CommutationDefectTooLarge(KamException):
    """
    Exception raised when the input maps do not commute to the required jet order.

    Attributes:
        defect (float): Certified norm of the commutator jet.
        tolerance (float): Accepted defect.
        pair (tuple[int, int] | None): Generators attaining the defect.
    """

    def __init__(
        self, message: str | None = None, defect: float = 0.0, tolerance: float = 0.0, pair: tuple | None = None
    ):
        super().__init__(message)
        self.defect = defect
        self.tolerance = tolerance
        self.pair = pair

    def to_dict(self) -> dict:
        return {"defect": self.defect, "tolerance": self.tolerance, "pair": self.pair}


class ResidualOrderError(KamException):
    """
    Exception raised when a Newton step leaves terms below the doubled vanishing order.

    Attributes:
        order (int): Expected vanishing order.
        magnitude (float): Largest low-order coefficient found.
    """

    def __init__(self, message: str | None = None, order: int = 0, magnitude: float = 0.0):
        super().__init__(message)
        self.order = order
        self.magnitude = magnitude

    def to_dict(self) -> dict:
        return {"order": self.order, "magnitude": self.magnitude}


class NoConvergence(KamException):
    """
    Exception raised when the iteration stops before the residual is small or the jet is exhausted.

    Attributes:
        rows (list[dict]): Report rows of the completed steps.
    """

    def __init__(self, message: str | None = None, rows: list | None = None):
        super().__init__(message)
        self.rows = rows or []

    def to_dict(self) -> dict:
        return {"rows": self.rows}
