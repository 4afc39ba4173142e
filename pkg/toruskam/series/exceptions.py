class SeriesException(Exception):
    """Base exception class for Taylor-Laurent series errors."""

    pass


class ZeroHCoordinate(SeriesException):
    """Exception raised when a series is evaluated at a point with a vanishing horizontal coordinate."""

    pass


class PBandOverflow(SeriesException):
    """
    Exception raised when coefficients fall outside the Laurent band |P|_inf <= P_max.

    Attributes:
        dropped_mass (float): Total absolute mass of the dropped coefficients.
    """

    def __init__(self, message: str | None = None, dropped_mass: float = 0.0):
        super().__init__(message)
        self.dropped_mass = dropped_mass

    def to_dict(self) -> dict:
        return {"dropped_mass": self.dropped_mass}


class IncompatibleSeries(SeriesException):
    """Exception raised when series with different dimensions or component counts are combined."""

    pass


class NotNearIdentity(SeriesException):
    """Exception raised when a composition argument is not of the form Id + O(|v|)."""

    pass
