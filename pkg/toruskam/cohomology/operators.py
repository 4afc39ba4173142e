import itertools

import numpy as np

from toruskam.lattice import DomainSpec
from toruskam.series import (
    DeckSystem,
    LinearDeck,
    TaylorLaurentSeries,
    apply_linear,
    apply_linear_inverse,
    compose,
    compose_with_linear,
    norm_upper,
)
from toruskam.utils.logger import logger


def divisor_multipliers(deck: LinearDeck, keys: np.ndarray) -> np.ndarray:
    """
    Complex divisors lambda_l^P mu_l^Q - t_{l,c} for every generator l, key row and component c.

    Component c < n has target lambda_{l,c}, component n + j has target mu_{l,j}.

    Returns:
        np.ndarray: Shape (n, N, n + d).
    """
    targets = np.concatenate([deck.lam, deck.mu], axis=1)
    log_monomials = deck.log_monomials(keys)
    with np.errstate(over="ignore", invalid="ignore"):
        return targets[:, None, :] * np.expm1(log_monomials[:, :, None] - np.log(targets)[:, None, :])


def apply_L(deck: LinearDeck, i: int, phi: TaylorLaurentSeries) -> TaylorLaurentSeries:
    """
    The linearized conjugacy operator L_i(phi) = phi o tau_hat_i - tau_hat_i . phi.

    Coefficientwise: component c at (Q, P) is multiplied by lambda_i^P mu_i^Q - t_{i,c}.
    """
    if phi.is_zero:
        return phi
    return phi.with_coeffs(phi.coeffs * divisor_multipliers(deck, phi.keys)[i])


def aligned_coefficients(series: list[TaylorLaurentSeries]) -> tuple[np.ndarray, np.ndarray]:
    """
    Coefficients of several series on the union of their supports.

    Returns:
        tuple[np.ndarray, np.ndarray]: Key rows (N, d + n) and coefficients (len(series), N, m).
    """
    m = series[0].m
    stacked = TaylorLaurentSeries.stack(series)
    coeffs = stacked.coeffs.reshape(len(stacked), len(series), m).transpose(1, 0, 2)
    return stacked.keys, coeffs


def commutator_jet(sys: DeckSystem, i: int, j: int, order: int, strict: bool = True) -> TaylorLaurentSeries:
    """
    J^order(tau_i o tau_j - tau_j o tau_i).

    With tau_j = tau_hat_j (Id + tau_hat_j^{-1} tau_j^bullet) every composite splits as
    tau_hat_i tau_hat_j + tau_hat_i . tau_j^bullet + (tau_i^bullet o tau_hat_j) o (Id + tau_hat_j^{-1} tau_j^bullet);
    the linear terms cancel because the linear parts are diagonal.
    """
    n, d = sys.n, sys.d
    identity = TaylorLaurentSeries.identity(n, d, sys.q_max, sys.p_max)

    def nonlinear_part(a: int, b: int) -> TaylorLaurentSeries:
        shift = identity + apply_linear_inverse(sys.linear, b, sys.pert[b])
        transported = compose(compose_with_linear(sys.pert[a], sys.linear, b), shift, strict=strict)
        return apply_linear(sys.linear, a, sys.pert[b]) + transported

    return (nonlinear_part(i, j) - nonlinear_part(j, i)).jet_truncate(order)


def commutation_defect(
    sys: DeckSystem, i: int, j: int, order: int, dom: DomainSpec | None = None, strict: bool = True
) -> float:
    """
    Certified norm of J^order(tau_i o tau_j - tau_j o tau_i) on `dom` (default: the system's domain).

    Raises:
        ValueError: If i == j.
        PBandOverflow: If strict and a composition leaves the Laurent band.
    """
    if i == j:
        raise ValueError("Commutation defect needs two distinct generators")
    if sys.is_linear:
        return 0.0
    return norm_upper(commutator_jet(sys, i, j, order, strict=strict), sys.lat, dom or sys.domain)


def max_commutation_defect(
    sys: DeckSystem, order: int, dom: DomainSpec | None = None, strict: bool = True
) -> tuple[float, tuple[int, int] | None]:
    """Largest commutation defect over all generator pairs, with the pair attaining it."""
    worst, pair = 0.0, None
    for i, j in itertools.combinations(range(sys.n), 2):
        defect = commutation_defect(sys, i, j, order, dom=dom, strict=strict)
        logger.debug(f"Commutation defect of ({i}, {j}) through order {order}: {defect:.3e}")
        if pair is None or defect > worst:
            worst, pair = defect, (i, j)
    return worst, pair


def compatibility_check(
    deck: LinearDeck,
    F: list[TaylorLaurentSeries],
    jet_range: tuple[int, int],
    rtol: float = 1e-9,
) -> bool:
    """
    Check (lambda_{l*}^P mu_{l*}^Q - t_{l*}) F_m = (lambda_m^P mu_m^Q - t_m) F_{l*} for every key in range.

    l* is the generator with the largest divisor for the key and component. The relations are the
    coefficientwise form of L_i F_j = L_j F_i and hold exactly when F_m = L_m G for some G.
    """
    q_low, q_high = jet_range
    F = [f.jet_truncate(q_high).drop_below(q_low) for f in F]
    if all(f.is_zero for f in F):
        return True
    keys, coeffs = aligned_coefficients(F)
    divisors = divisor_multipliers(deck, keys)
    best = np.abs(divisors).argmax(axis=0)[None]
    D_star = np.take_along_axis(divisors, best, axis=0)
    F_star = np.take_along_axis(coeffs, best, axis=0)
    left, right = D_star * coeffs, divisors * F_star
    atol = 1e-12 * float(np.abs(coeffs).max())
    mismatch = np.abs(left - right) > rtol * np.maximum(np.abs(left), np.abs(right)) + atol
    if mismatch.any():
        logger.warning(f"Compatibility relations fail on {int(mismatch.sum())} coefficients")
    return not bool(mismatch.any())
