import math

from toruskam.series import TaylorLaurentSeries, compose
from toruskam.utils.logger import logger


def invert_map(phi: TaylorLaurentSeries, q: int, strict: bool = True) -> TaylorLaurentSeries:
    """
    psi with (Id + phi)^{-1} = Id - psi, by the contraction psi <- phi o (Id - psi) from psi = 0.

    Each sweep fixes at least q more vertical orders, so the iteration is stationary after
    ceil(Q_max / q) sweeps; it stops as soon as two iterates coincide.

    Args:
        phi (TaylorLaurentSeries): Map-valued series with v_min >= q + 1.
        q (int): Order parameter, q >= 1.
        strict (bool): Raise on Laurent band overflow.

    Returns:
        TaylorLaurentSeries: psi, satisfying (Id + phi) o (Id - psi) = Id through order Q_max.

    Raises:
        ValueError: If q < 1 or phi vanishes to a lower order than q + 1.
        PBandOverflow: If strict and a composition leaves the band.
    """
    if q < 1:
        raise ValueError(f"Inversion order must be at least 1, got {q}")
    if phi.v_min < q + 1:
        raise ValueError(f"phi must vanish to order {q + 1}, has v_min = {phi.v_min}")
    if phi.is_zero:
        return phi
    identity = TaylorLaurentSeries.identity(phi.n, phi.d, phi.q_max, phi.p_max)
    psi = TaylorLaurentSeries.zeros(phi.n, phi.d, phi.m, phi.q_max, phi.p_max)
    max_sweeps = math.ceil(phi.q_max / q) + 2
    for sweep in range(1, max_sweeps + 1):
        updated = compose(phi, identity - psi, strict=strict)
        if updated == psi:
            logger.debug(f"Map inversion stationary after {sweep} sweeps")
            return updated
        psi = updated
    logger.debug(f"Map inversion stopped after {max_sweeps} sweeps")
    return psi
