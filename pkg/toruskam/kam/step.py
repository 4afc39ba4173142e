import numpy as np
from pydantic import BaseModel

from toruskam.cohomology import CohomSolveReport, max_commutation_defect, solve
from toruskam.diophantine import DiophantineFit
from toruskam.kam.exceptions import CommutationDefectTooLarge, ResidualOrderError
from toruskam.kam.inversion import invert_map
from toruskam.lattice import DomainSpec
from toruskam.series import (
    DeckSystem,
    TaylorLaurentSeries,
    apply_linear,
    apply_linear_inverse,
    compose,
    compose_with_linear,
    norm_upper,
)
from toruskam.utils.logger import logger

LOW_ORDER_TOLERANCE = 1e-10


class StepReport(BaseModel):
    """
    Diagnostics of one Newton step.

    Attributes:
        k (int): Step index.
        q_k (int): Effective order, the perturbation was O(|v|^{q_k + 1}).
        v_min_before (int): Vanishing order before the step.
        v_min_after (int): Vanishing order after the step (Q_max + 1 when exhausted).
        commutation_defect (float): Commutator jet norm checked before solving.
        low_order_residue (float): Largest relative coefficient below order 2 q_k + 1 that was zeroed.
        dropped_mass (float): Laurent band mass dropped during the step.
        solve (CohomSolveReport): Cohomological solve diagnostics.
        remainders (dict[str, float] | None): Norms of the four remainder terms, when requested.
    """

    k: int
    q_k: int
    v_min_before: int
    v_min_after: int
    commutation_defect: float
    low_order_residue: float
    dropped_mass: float
    solve: CohomSolveReport
    remainders: dict[str, float] | None = None

    def to_dict(self, **kwargs) -> dict:
        return self.model_dump(**kwargs)


def low_order_residue(
    residual: list[TaylorLaurentSeries], reference: list[TaylorLaurentSeries], order: int
) -> float:
    """
    Largest coefficient of order < `order` in `residual`, relative to the reference coefficients of
    the same vertical order.
    """
    worst = 0.0
    for degree in range(order):
        scale = max(_degree_max(f, degree) for f in reference)
        size = max(_degree_max(f, degree) for f in residual)
        if size > 0:
            worst = max(worst, size / scale if scale > 0 else float("inf"))
    return worst


def _degree_max(f: TaylorLaurentSeries, degree: int) -> float:
    mask = f.degrees == degree
    return float(np.abs(f.coeffs[mask]).max()) if mask.any() else 0.0


def conjugate(
    sys: DeckSystem, phi: TaylorLaurentSeries, psi: TaylorLaurentSeries, strict: bool = True
) -> list[TaylorLaurentSeries]:
    """
    Perturbations of (Id + phi) o tau_i o (Id - psi), computed jet-exactly.

    With R_i = -tau_hat_i . psi + tau_i^bullet o (Id - psi) one has
    tau_i o (Id - psi) = tau_hat_i (Id + tau_hat_i^{-1} R_i),
    so the new perturbation is R_i + (phi o tau_hat_i) o (Id + tau_hat_i^{-1} R_i).
    """
    identity = TaylorLaurentSeries.identity(sys.n, sys.d, sys.q_max, sys.p_max)
    inverse = identity - psi
    result = []
    for i in range(sys.n):
        R = compose(sys.pert[i], inverse, strict=strict) - apply_linear(sys.linear, i, psi)
        shifted = identity + apply_linear_inverse(sys.linear, i, R)
        result.append(R + compose(compose_with_linear(phi, sys.linear, i), shifted, strict=strict))
    return result


def remainder_terms(
    sys: DeckSystem, phi: TaylorLaurentSeries, psi: TaylorLaurentSeries, i: int, q: int, strict: bool = True
) -> dict[str, TaylorLaurentSeries]:
    """
    Split the new perturbation of generator i into four terms that each vanish to order 2q + 1.

    cohomological_defect: L_i(phi) + J^{2q}(tau_i^bullet);
    inversion_mismatch: tau_hat_i . (phi - psi);
    perturbation_transport: tau_i^bullet o (Id - psi) - J^{2q}(tau_i^bullet);
    phi_transport: phi o tau_i o (Id - psi) - phi o tau_hat_i.
    Their sum equals `conjugate(sys, phi, psi)[i]`.
    """
    identity = TaylorLaurentSeries.identity(sys.n, sys.d, sys.q_max, sys.p_max)
    jet = sys.pert[i].jet_truncate(2 * q)
    phi_hat = compose_with_linear(phi, sys.linear, i)
    R = compose(sys.pert[i], identity - psi, strict=strict) - apply_linear(sys.linear, i, psi)
    shifted = identity + apply_linear_inverse(sys.linear, i, R)
    return {
        "cohomological_defect": phi_hat - apply_linear(sys.linear, i, phi) + jet,
        "inversion_mismatch": apply_linear(sys.linear, i, phi - psi),
        "perturbation_transport": compose(sys.pert[i], identity - psi, strict=strict) - jet,
        "phi_transport": compose(phi_hat, shifted, strict=strict) - phi_hat,
    }


def newton_step(
    sys: DeckSystem,
    k: int,
    domain: DomainSpec,
    delta: float,
    fit: DiophantineFit | None = None,
    commutation_tol: float = 1e-8,
    strict: bool = True,
    with_remainders: bool = False,
) -> tuple[DeckSystem, TaylorLaurentSeries, TaylorLaurentSeries, StepReport]:
    """
    One conjugation tau_i -> (Id + phi) o tau_i o (Id + phi)^{-1}.

    With tau^bullet = O(|v|^{q+1}) the step solves L_i(phi) = -J^{2q}(tau_i^bullet), inverts Id + phi
    and conjugates; the new perturbation is O(|v|^{2q+1}) and its lower orders are zeroed exactly.

    Args:
        sys (DeckSystem): Current system.
        k (int): Step index.
        domain (DomainSpec): Current domain (eps_k, r_k).
        delta (float): Current shrink step, for norm reports.
        fit (DiophantineFit | None): Fitted constants for the coefficient estimate.
        commutation_tol (float): Accepted commutation defect.
        strict (bool): Raise on Laurent band overflow.
        with_remainders (bool): Also compute the four-term remainder norms.

    Returns:
        tuple: New system, phi, psi and the step report.

    Raises:
        CommutationDefectTooLarge: If the maps do not commute through order 2q.
        ResonantDivisor: If the cohomological equation meets a resonance.
        ResidualOrderError: If low orders fail to cancel.
        PBandOverflow: If strict and a composition leaves the band.
    """
    v_min = sys.v_min
    q = v_min - 1
    top = min(2 * q, sys.q_max)
    defect, pair = max_commutation_defect(sys, top, dom=domain, strict=strict)
    if defect > commutation_tol:
        logger.error(f"Step {k}: commutation defect {defect:.3e} of pair {pair} exceeds {commutation_tol:.1e}")
        raise CommutationDefectTooLarge(
            f"Maps {pair} do not commute through order {top}: defect {defect:.3e}",
            defect=defect, tolerance=commutation_tol, pair=pair,
        )

    F = [-f.jet_truncate(top) for f in sys.pert]
    phi, solve_report = solve(F, sys.linear, (2, top), fit=fit, lat=sys.lat, dom=domain, delta=delta)
    psi = invert_map(phi, q, strict=strict)
    new_pert = conjugate(sys, phi, psi, strict=strict)

    order = 2 * q + 1
    residue = low_order_residue(new_pert, sys.pert + [phi], order)
    if residue > LOW_ORDER_TOLERANCE:
        logger.error(f"Step {k}: terms of order < {order} survive with size {residue:.3e}")
        raise ResidualOrderError(f"Residual has terms of order < {order} of size {residue:.3e}", order, residue)
    dropped = max(f.dropped_mass for f in new_pert) + psi.dropped_mass
    new_pert = [f.drop_below(order).clear_dropped() for f in new_pert]
    new_sys = sys.with_pert(new_pert)

    remainders = None
    if with_remainders:
        remainders = {}
        for i in range(sys.n):
            for name, term in remainder_terms(sys, phi, psi, i, q, strict=strict).items():
                remainders[name] = max(remainders.get(name, 0.0), norm_upper(term, sys.lat, domain))

    report = StepReport(
        k=k,
        q_k=q,
        v_min_before=v_min,
        v_min_after=new_sys.v_min,
        commutation_defect=defect,
        low_order_residue=residue,
        dropped_mass=dropped,
        solve=solve_report,
        remainders=remainders,
    )
    logger.debug(f"Step {k}: v_min {v_min} -> {new_sys.v_min}, {len(phi)} terms in phi")
    return new_sys, phi, psi.clear_dropped(), report
