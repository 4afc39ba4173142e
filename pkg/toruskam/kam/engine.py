import math

import numpy as np

from toruskam.diophantine import DiophantineFit, diophantine_fit
from toruskam.kam.exceptions import NoConvergence
from toruskam.kam.params import KamParams, schedule
from toruskam.kam.report import KamReport, KamRow
from toruskam.kam.step import newton_step
from toruskam.lattice import DomainSpec, kappa
from toruskam.runnables import RunnableConfig
from toruskam.series import (
    DeckSystem,
    TaylorLaurentSeries,
    apply_linear,
    compose,
    compose_with_linear,
    dilate,
    eval,
    norm_upper,
    sample_domain,
)
from toruskam.utils.logger import logger

DILATION_EXPONENT_FLOOR = 250.0
VERIFY_SAMPLES = 100
VERIFY_V_SCALE = 1e-2


def residual_norm(sys: DeckSystem, dom: DomainSpec, dilation: float = 1.0) -> float:
    """max_i certified norm of tau_i^bullet on dom, measured in coordinates undoing `dilation`."""
    if sys.is_linear:
        return 0.0
    pert = sys.pert if dilation == 1.0 else [dilate(f, 1.0 / dilation) for f in sys.pert]
    return max(norm_upper(f, sys.lat, dom) for f in pert)


def choose_dilation(sys: DeckSystem, dom: DomainSpec, target: float) -> tuple[float, bool]:
    """
    Largest s = 2^{-j} such that the dilated perturbation has norm <= target on dom.

    s is floored at 10^{-250 / Q_max} so that order-Q_max coefficients stay well inside double
    range; the second return value tells whether the floor was hit.
    """
    floor = 10.0 ** (-DILATION_EXPONENT_FLOOR / max(sys.q_max, 1))
    s = 1.0
    while residual_norm(sys.with_pert([dilate(f, s) for f in sys.pert]), dom) > target:
        if s / 2.0 < floor:
            return floor, True
        s /= 2.0
    return s, False


def verify_conjugacy(Phi: TaylorLaurentSeries, sys: DeckSystem, dom: DomainSpec, strict: bool = True) -> float:
    """
    max_i certified norm of Phi o tau_hat_i - tau_i o Phi through order Q_max on dom.

    Raises:
        PBandOverflow: If strict and a composition leaves the band.
    """
    worst = 0.0
    for i in range(sys.n):
        lhs = compose_with_linear(Phi, sys.linear, i)
        rhs = apply_linear(sys.linear, i, Phi) + compose(sys.pert[i], Phi, strict=strict)
        worst = max(worst, norm_upper(lhs - rhs, sys.lat, dom))
    return worst


def sampled_conjugacy_defect(
    Phi: TaylorLaurentSeries,
    sys: DeckSystem,
    dom: DomainSpec,
    n_points: int = VERIFY_SAMPLES,
    seed: int = 0,
    v_scale: float = VERIFY_V_SCALE,
) -> float:
    """
    Pointwise max |Phi(tau_hat_i x) - tau_i(Phi(x))| at random points with |v| <= v_scale r.

    Small |v| keeps the truncation error below the identity being checked.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    h, v = sample_domain(sys.lat, DomainSpec(eps=dom.eps, r=dom.r * v_scale), n_points, rng, sys.d)
    worst = 0.0
    for i in range(sys.n):
        eigen = sys.linear.component_eigenvalues(i)
        lhs = eval(Phi, h * eigen[None, : sys.n], v * eigen[None, sys.n:])
        image = eval(Phi, h, v)
        rhs = eval(sys.tau(i), image[:, : sys.n], image[:, sys.n:])
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def _prepare_params(sys: DeckSystem, params: KamParams) -> KamParams:
    update = {"kappa": kappa(sys.lat)} if params.kappa is None else {}
    if params.mu_exp is None:
        update["mu_exp"] = params.resolved_mu_exp(sys.n, sys.d)
    return KamParams.model_validate({**params.model_dump(), **update})


def _serialized(params: KamParams, sys: DeckSystem) -> dict:
    return {"params": params.to_dict(), "n": sys.n, "d": sys.d, "q_max": sys.q_max, "p_max": sys.p_max}


def run(
    sys: DeckSystem,
    params: KamParams,
    fit: DiophantineFit | None = None,
    config: RunnableConfig | None = None,
    with_remainders: bool = False,
) -> tuple[TaylorLaurentSeries, KamReport]:
    """
    Linearize a commuting deck system by Newton steps.

    Each step doubles the vanishing order of the perturbation; the accumulated map
    Phi_total = (Id - psi_0) o (Id - psi_1) o ... satisfies Phi_total o tau_hat_i = tau_i o Phi_total
    once the residual vanishes through Q_max. When the initial perturbation exceeds delta0^mu on
    (eps0, r0) the system is first conjugated by a vertical dilation, which is undone on the result.

    Args:
        sys (DeckSystem): System to linearize.
        params (KamParams): Iteration parameters.
        fit (DiophantineFit | None): Diophantine constants; taken from params or fitted when omitted.
        config (RunnableConfig | None): Run id, callbacks and worker count.
        with_remainders (bool): Record the four remainder-term norms at each step.

    Returns:
        tuple[TaylorLaurentSeries, KamReport]: The linearizer Phi_total and the run report.

    Raises:
        InvalidParams: If params violate the smallness conditions for this lattice.
        CommutationDefectTooLarge: If the maps do not commute.
        ResonantDivisor: If a cohomological equation is resonant.
        PBandOverflow: Under the strict overflow policy.
        NoConvergence: If K_max steps do not reach the tolerance; carries the rows.
    """
    config = config or RunnableConfig()
    params = _prepare_params(sys, params)
    serialized = _serialized(params, sys)
    run_kwargs = {"run_id": config.run_id}
    for callback in config.callbacks:
        callback.on_run_start(
            serialized, {"n": sys.n, "d": sys.d, "v_min": sys.v_min, "q_max": sys.q_max}, **run_kwargs
        )
    try:
        Phi, report = _iterate(sys, params, fit, config, with_remainders, serialized, run_kwargs)
    except Exception as e:
        for callback in config.callbacks:
            callback.on_run_error(serialized, e, **run_kwargs)
        raise
    for callback in config.callbacks:
        callback.on_run_end(serialized, report.to_dict(), **run_kwargs)
    return Phi, report


def _iterate(
    sys: DeckSystem,
    params: KamParams,
    fit: DiophantineFit | None,
    config: RunnableConfig,
    with_remainders: bool,
    serialized: dict,
    run_kwargs: dict,
) -> tuple[TaylorLaurentSeries, KamReport]:
    identity = TaylorLaurentSeries.identity(sys.n, sys.d, sys.q_max, sys.p_max)
    rows_schedule = schedule(params, params.K_max + 1)
    dom0 = rows_schedule[0].domain
    mu_exp = params.mu_exp

    initial = residual_norm(sys, dom0)
    report = KamReport(final_domain=dom0, initial_residual=initial, mu_exp=mu_exp)
    if sys.v_min > sys.q_max:
        logger.info("Input system is linear through Q_max; nothing to do")
        report.converged = report.jet_exhausted = True
        report.conjugacy_defect = 0.0
        return identity, report

    if fit is None:
        if params.D_fit is not None:
            fit = DiophantineFit(tau_exp=params.tau_exp, D_fit=params.D_fit, N_scan=params.N_scan)
        else:
            fit = diophantine_fit(sys.linear, params.N_scan, params.tau_exp, max_workers=config.max_workers)

    s = 1.0
    target = params.delta0 ** mu_exp
    if params.dilate and initial > target:
        s, clamped = choose_dilation(sys, dom0, target)
        if clamped:
            logger.warning(f"Dilation clamped at s = {s:.3e}; residual stays above delta0^mu = {target:.3e}")
        logger.info(f"Preconditioning by vertical dilation s = {s:.3e}")
    report.dilation = s
    current = sys.with_pert([dilate(f, s) for f in sys.pert]) if s != 1.0 else sys
    Phi_total = identity
    residual = initial

    for k in range(params.K_max):
        if current.v_min > current.q_max:
            report.jet_exhausted = True
            break
        if residual < params.residual_tol:
            break
        row_k, row_next = rows_schedule[k], rows_schedule[k + 1]
        for callback in config.callbacks:
            callback.on_step_start(serialized, {"k": k, "v_min": current.v_min}, **run_kwargs)

        current, phi, psi, step = newton_step(
            current,
            k,
            row_k.domain,
            row_k.delta_k,
            fit=fit,
            commutation_tol=params.commutation_tol,
            strict=params.strict,
            with_remainders=with_remainders,
        )
        updated = compose(Phi_total, identity - psi, strict=params.strict)
        increment = updated - Phi_total
        Phi_total = updated.clear_dropped()

        residual = residual_norm(current, row_next.domain, s)
        scaled = residual_norm(current, row_next.domain)
        if scaled > row_next.delta_k ** mu_exp:
            report.within_schedule = False
        row = KamRow(
            k=k,
            q_k=step.q_k,
            v_min=step.v_min_after,
            delta_k=row_k.delta_k,
            eps_k=row_k.eps_k,
            r_k=row_k.r_k,
            residual_bound=residual,
            scaled_residual=scaled,
            phi_norm=norm_upper(dilate(phi, 1.0 / s), sys.lat, row_k.domain),
            phi_increment=norm_upper(dilate(increment, 1.0 / s), sys.lat, row_next.domain),
            dropped_mass=step.dropped_mass + increment.dropped_mass,
        )
        report.rows.append(row)
        report.final_domain = row_next.domain
        for callback in config.callbacks:
            callback.on_step_end(serialized, {**row.to_dict(), "step": step.to_dict()}, **run_kwargs)
    else:
        report.jet_exhausted = current.v_min > current.q_max

    report.converged = report.jet_exhausted or residual < params.residual_tol
    if not report.within_schedule:
        logger.warning(f"Scaled residuals exceeded delta_k^mu with mu = {mu_exp}")
    if not report.converged:
        logger.error(f"No convergence after {len(report.rows)} steps, residual {residual:.3e}")
        raise NoConvergence(
            f"Residual {residual:.3e} after {len(report.rows)} steps", rows=[row.to_dict() for row in report.rows]
        )

    Phi = identity + dilate(Phi_total - identity, 1.0 / s) if s != 1.0 else Phi_total
    report.conjugacy_defect = verify_conjugacy(Phi, sys, report.final_domain, strict=params.strict)
    report.sampled_defect = sampled_conjugacy_defect(Phi, sys, report.final_domain)
    logger.info(
        f"Converged in {len(report.rows)} steps: conjugacy defect {report.conjugacy_defect:.3e}, "
        f"sampled {report.sampled_defect:.3e}"
    )
    return Phi, report
