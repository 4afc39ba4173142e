import math
from typing import Literal

from pydantic import BaseModel, Field, model_validator

from toruskam.kam.exceptions import InvalidParams
from toruskam.lattice import DomainSpec


class KamParams(BaseModel):
    """
    Parameters of the Newton iteration.

    Attributes:
        delta0 (float): Initial shrink step, below ln(2)/10 and kappa eps0/20.
        eps0 (float): Initial horizontal enlargement.
        r0 (float): Initial vertical radius.
        mu_exp (float | None): Residual exponent; 3 (tau_exp + n + d) when omitted.
        q0 (int): Initial order q with tau^bullet = O(|v|^{q0 + 1}).
        K_max (int): Iteration cap.
        tau_exp (float): Diophantine exponent.
        D_fit (float | None): Diophantine constant; fitted from a scan when omitted.
        N_scan (int): Scan cutoff used for the fit.
        kappa (float | None): Lattice constant used by the eps schedule.
        overflow_policy (Literal["strict", "tolerant"]): Laurent band overflow handling.
        commutation_tol (float): Accepted commutation defect per step.
        residual_tol (float): Stop when the residual bound drops below this value.
        dilate (bool): Precondition by a vertical dilation when the residual is too large.
    """

    delta0: float = Field(default=0.02, gt=0.0)
    eps0: float = Field(default=0.1, gt=0.0)
    r0: float = Field(default=0.5, gt=0.0)
    mu_exp: float | None = Field(default=None, gt=0.0)
    q0: int = Field(default=1, ge=1)
    K_max: int = Field(default=20, ge=0)
    tau_exp: float = Field(default=2.0, ge=0.0)
    D_fit: float | None = Field(default=None, gt=0.0)
    N_scan: int = Field(default=12, ge=2)
    kappa: float | None = Field(default=None, gt=0.0)
    overflow_policy: Literal["strict", "tolerant"] = "strict"
    commutation_tol: float = Field(default=1e-8, ge=0.0)
    residual_tol: float = Field(default=1e-12, gt=0.0)
    dilate: bool = True

    @model_validator(mode="after")
    def validate_smallness(self) -> "KamParams":
        check_smallness(self)
        return self

    @property
    def strict(self) -> bool:
        return self.overflow_policy == "strict"

    def resolved_mu_exp(self, n: int, d: int) -> float:
        return self.mu_exp if self.mu_exp is not None else 3.0 * (self.tau_exp + n + d)

    def to_dict(self, **kwargs) -> dict:
        return self.model_dump(**kwargs)


def check_smallness(params: KamParams) -> None:
    """
    delta0 < ln(2) / 10 always, and delta0 < kappa eps0 / 20 once kappa is known.

    Raises:
        InvalidParams: If a condition fails.
    """
    if params.delta0 >= math.log(2.0) / 10.0:
        raise InvalidParams(f"delta0 = {params.delta0} must be below ln(2)/10 = {math.log(2.0) / 10.0:.6f}")
    if params.kappa is not None and params.delta0 >= params.kappa * params.eps0 / 20.0:
        raise InvalidParams(
            f"delta0 = {params.delta0} must be below kappa eps0 / 20 = {params.kappa * params.eps0 / 20.0:.6f}"
        )


class ScheduleRow(BaseModel):
    """Shrink step, domain and jet order of iteration k."""

    k: int
    delta_k: float
    eps_k: float
    r_k: float
    q_k: int

    @property
    def domain(self) -> DomainSpec:
        return DomainSpec(eps=self.eps_k, r=self.r_k)


def schedule(params: KamParams, K: int) -> list[ScheduleRow]:
    """
    delta_k = delta0 / (k + 1)^2, r_{k+1} = r_k e^{-5 delta_k}, eps_{k+1} = eps_k - 5 delta_k / kappa,
    q_{k+1} = 2 q_k + 1, for k = 0..K-1.

    Raises:
        InvalidParams: If kappa is unset or the smallness conditions fail.
    """
    if params.kappa is None:
        raise InvalidParams("The schedule needs kappa; set it from the lattice first")
    check_smallness(params)
    rows = []
    eps, r, q = params.eps0, params.r0, params.q0
    for k in range(K):
        delta = params.delta0 / (k + 1) ** 2
        rows.append(ScheduleRow(k=k, delta_k=delta, eps_k=eps, r_k=r, q_k=q))
        eps -= 5.0 * delta / params.kappa
        r *= math.exp(-5.0 * delta)
        q = 2 * q + 1
    return rows
