class DiophantineException(Exception):
    """Base exception class for small-divisor analysis errors."""

    pass


class ResonantInput(DiophantineException):
    """
    Exception raised when a Diophantine fit is requested for a resonant deck.

    Attributes:
        witnesses (list): Divisor records at or below the resonance tolerance.
    """

    def __init__(self, message: str | None = None, witnesses: list | None = None):
        super().__init__(message)
        self.witnesses = witnesses or []

    def to_dict(self) -> dict:
        return {"witnesses": [witness.to_dict() for witness in self.witnesses]}


class NotUnimodular(DiophantineException):
    """Exception raised when a generator change matrix is not an integer matrix with determinant +-1."""

    pass
