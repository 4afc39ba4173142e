import math

import numpy as np
from pydantic import BaseModel

from toruskam.cohomology.exceptions import IncompatibleRHS, ResonantDivisor
from toruskam.cohomology.operators import aligned_coefficients, apply_L, compatibility_check, divisor_multipliers
from toruskam.diophantine import DiophantineFit
from toruskam.lattice import DomainSpec, Lattice, kappa
from toruskam.series import LinearDeck, TaylorLaurentSeries, compose_with_linear, norm_upper
from toruskam.utils.logger import logger

RESONANT_DIVISOR_RTOL = 1e-13
RESONANT_RHS_RTOL = 1e-12
NEAR_RESONANT_THRESHOLD = 1e-8
SOLUTION_RTOL = 1e-9


class CohomSolveReport(BaseModel):
    """
    Diagnostics of one solve of L_m G = F_m.

    Attributes:
        jet_range (tuple[int, int]): Vertical orders solved.
        max_divisor_used (float): Smallest divisor modulus actually divided by (inf if none).
        near_resonant (int): Divisions by a divisor below the near-resonance threshold.
        skipped_resonant (int): Coefficients left at zero because divisor and right-hand side both vanish.
        residual (float): max_m |L_m G - F_m| over the coefficients in range.
        norm_G (float | None): Certified norm of G on the shrunk domain.
        norm_G_composed (float | None): max_i certified norm of G o tau_hat_i on the shrunk domain.
        bound_violations (int | None): Coefficients violating the Diophantine estimate.
    """

    jet_range: tuple[int, int]
    max_divisor_used: float = math.inf
    near_resonant: int = 0
    skipped_resonant: int = 0
    residual: float = 0.0
    norm_G: float | None = None
    norm_G_composed: float | None = None
    bound_violations: int | None = None

    def to_dict(self, **kwargs) -> dict:
        return self.model_dump(**kwargs)


def degree_scale(degrees: np.ndarray, magnitude: np.ndarray) -> np.ndarray:
    """
    Largest coefficient modulus among keys of the same vertical order, broadcast back to every key.

    Coefficients of different orders live on different scales (for instance after a vertical
    dilation), so significance is judged order by order.
    """
    row_max = magnitude.max(axis=1)
    per_degree = np.zeros(int(degrees.max()) + 1 if degrees.size else 0)
    np.maximum.at(per_degree, degrees, row_max)
    return per_degree[degrees][:, None]


def _target_label(n: int, component: int) -> str:
    return f"h{component}" if component < n else f"v{component - n}"


def solve(
    F: list[TaylorLaurentSeries],
    deck: LinearDeck,
    jet_range: tuple[int, int],
    fit: DiophantineFit | None = None,
    lat: Lattice | None = None,
    dom: DomainSpec | None = None,
    delta: float | None = None,
    check_compatibility: bool = True,
) -> tuple[TaylorLaurentSeries, CohomSolveReport]:
    """
    Solve L_m G = F_m (m = 1..n) on the vertical orders q_low <= |Q| <= q_high.

    Every coefficient is G_{Q,P} = F_{l*,Q,P} / (lambda_{l*}^P mu_{l*}^Q - t_{l*}) where l* is the
    generator with the largest divisor for that key and component (first index on ties).

    Args:
        F (list[TaylorLaurentSeries]): Right-hand sides, one map-valued series per generator.
        deck (LinearDeck): Linear data.
        jet_range (tuple[int, int]): (q_low, q_high).
        fit (DiophantineFit | None): When given, the coefficient estimate is checked.
        lat (Lattice | None): Period data for the norm estimates.
        dom (DomainSpec | None): Domain of F; norms are reported on its shrink by delta.
        delta (float | None): Shrink parameter.
        check_compatibility (bool): Verify the compatibility relations first.

    Returns:
        tuple[TaylorLaurentSeries, CohomSolveReport]: G with support in the jet range, and diagnostics.

    Raises:
        IncompatibleRHS: If the compatibility relations fail.
        ResonantDivisor: If a divisor vanishes against a nonzero right-hand side.
    """
    q_low, q_high = jet_range
    if len(F) != deck.n:
        raise ValueError(f"Expected {deck.n} right-hand sides, got {len(F)}")
    F = [f.jet_truncate(q_high).drop_below(q_low) for f in F]
    report = CohomSolveReport(jet_range=(q_low, q_high))
    template = F[0]
    if all(f.is_zero for f in F):
        G = TaylorLaurentSeries.zeros(template.n, template.d, template.m, template.q_max, template.p_max)
        return G, _with_norms(report, G, F, deck, fit, lat, dom, delta)

    if check_compatibility and not compatibility_check(deck, F, jet_range):
        logger.error("Right-hand sides of the cohomological equations are incompatible")
        raise IncompatibleRHS("Right-hand sides violate L_i F_j = L_j F_i")

    keys, coeffs = aligned_coefficients(F)
    divisors = divisor_multipliers(deck, keys)
    best = np.abs(divisors).argmax(axis=0)[None]
    D_star = np.take_along_axis(divisors, best, axis=0)[0]
    F_star = np.take_along_axis(coeffs, best, axis=0)[0]

    scale = 1.0 + np.exp(deck.log_monomials(keys).real).max(axis=0)[:, None]
    F_max = float(np.abs(coeffs).max())
    magnitude = np.abs(coeffs).max(axis=0)
    resonant = np.abs(D_star) < RESONANT_DIVISOR_RTOL * scale
    forced = resonant & (magnitude > RESONANT_RHS_RTOL * degree_scale(keys[:, : deck.d].sum(axis=1), magnitude))
    if forced.any():
        row, component = (int(index[0]) for index in np.nonzero(forced))
        key = keys[row]
        P, Q = [int(p) for p in key[deck.d:]], [int(q) for q in key[: deck.d]]
        target = _target_label(deck.n, component)
        value = float(abs(D_star[row, component]))
        logger.error(f"Resonant divisor {value:.3e} at P={P}, Q={Q}, target {target}")
        raise ResonantDivisor(
            f"Divisor vanishes at P={P}, Q={Q}, target {target}", P=P, Q=Q, target=target, value=value
        )

    used = ~resonant & (np.abs(F_star) > 0)
    G_coeffs = np.zeros_like(F_star)
    G_coeffs[used] = F_star[used] / D_star[used]
    moduli = np.abs(D_star[used])
    report.max_divisor_used = float(moduli.min()) if moduli.size else math.inf
    report.near_resonant = int((moduli < NEAR_RESONANT_THRESHOLD).sum())
    report.skipped_resonant = int((resonant & (magnitude > 0)).sum())
    if report.near_resonant:
        logger.warning(f"{report.near_resonant} near-resonant divisors, smallest {report.max_divisor_used:.3e}")
    if report.skipped_resonant:
        logger.debug(f"{report.skipped_resonant} coefficients with vanishing divisor and right-hand side set to 0")

    G = TaylorLaurentSeries(template.n, template.d, template.m, template.q_max, template.p_max, keys, G_coeffs)
    report.residual = max(float((apply_L(deck, m, G) - f).max_abs()) for m, f in enumerate(F))
    if report.residual > SOLUTION_RTOL * max(F_max, 1.0):
        logger.warning(f"Cohomological solution residual {report.residual:.3e} exceeds tolerance")
    logger.debug(f"Solved orders {q_low}..{q_high}: {len(G)} terms, smallest divisor {report.max_divisor_used:.3e}")
    return G, _with_norms(report, G, F, deck, fit, lat, dom, delta)


def _with_norms(
    report: CohomSolveReport,
    G: TaylorLaurentSeries,
    F: list[TaylorLaurentSeries],
    deck: LinearDeck,
    fit: DiophantineFit | None,
    lat: Lattice | None,
    dom: DomainSpec | None,
    delta: float | None,
) -> CohomSolveReport:
    if fit is not None:
        report.bound_violations = coefficient_bound_violations(G, F, fit)
    if lat is not None and dom is not None:
        shrunk = dom.shrink(delta, kappa(lat)) if delta else dom
        report.norm_G = norm_upper(G, lat, shrunk)
        report.norm_G_composed = max(
            norm_upper(compose_with_linear(G, deck, i), lat, shrunk) for i in range(deck.n)
        )
    return report


def coefficient_bound_violations(
    G: TaylorLaurentSeries, F: list[TaylorLaurentSeries], fit: DiophantineFit, rtol: float = 1e-9
) -> int:
    """
    Count coefficients with |G_{Q,P}| > max_i |F_{i,Q,P}| (|P| + |Q|)^tau / D_fit.

    Only keys with |Q| >= 2 and |P| + |Q| <= N_scan are certified by the fit; the others are
    counted in the log and skipped.
    """
    if G.is_zero:
        return 0
    keys, coeffs = aligned_coefficients([G] + list(F))
    orders = np.abs(keys).sum(axis=1)
    degrees = keys[:, : G.d].sum(axis=1)
    in_range = (orders <= fit.N_scan) & (degrees >= 2)
    outside = int((~in_range & np.any(coeffs[0] != 0, axis=1)).sum())
    if outside:
        logger.debug(f"{outside} solution coefficients lie outside the scanned range and are not certified")
    if not math.isfinite(fit.D_fit) or fit.D_fit <= 0:
        return 0
    bound = np.abs(coeffs[1:]).max(axis=0) * (orders.astype(float) ** fit.tau_exp)[:, None] / fit.D_fit
    violations = (np.abs(coeffs[0]) > bound * (1.0 + rtol)) & in_range[:, None]
    if violations.any():
        logger.warning(f"Diophantine coefficient estimate violated by {int(violations.sum())} coefficients")
    return int(violations.sum())
