import csv
import io
from pathlib import Path

from pydantic import BaseModel

from toruskam.lattice import DomainSpec

CSV_COLUMNS = ["k", "q_k", "delta_k", "eps_k", "r_k", "residual_bound", "phi_norm", "dropped_mass"]


class KamRow(BaseModel):
    """
    One accepted Newton step.

    Attributes:
        k (int): Step index.
        q_k (int): Effective order of the step.
        v_min (int): Vanishing order of the residual after the step.
        delta_k (float): Shrink step.
        eps_k (float): Horizontal enlargement of the step domain.
        r_k (float): Vertical radius of the step domain.
        residual_bound (float): Certified residual norm after the step, original coordinates.
        scaled_residual (float): The same norm in dilated coordinates.
        phi_norm (float): Certified norm of the step map phi, original coordinates.
        phi_increment (float): Certified norm of the change of the accumulated linearizer.
        dropped_mass (float): Laurent band mass dropped during the step.
    """

    k: int
    q_k: int
    v_min: int
    delta_k: float
    eps_k: float
    r_k: float
    residual_bound: float
    scaled_residual: float
    phi_norm: float
    phi_increment: float
    dropped_mass: float

    def to_dict(self, **kwargs) -> dict:
        return self.model_dump(**kwargs)


class KamReport(BaseModel):
    """
    Record of a linearization run.

    Attributes:
        rows (list[KamRow]): Accepted steps.
        converged (bool): Residual below tolerance or jet exhausted.
        jet_exhausted (bool): The residual vanishes through Q_max.
        final_domain (DomainSpec): Domain after the last step.
        dilation (float): Vertical dilation factor s used as preconditioning (1 when none).
        initial_residual (float): Certified perturbation norm on the initial domain.
        within_schedule (bool): Every scaled residual stayed below delta_{k+1}^mu.
        conjugacy_defect (float | None): Certified norm of Phi o tau_hat_i - tau_i o Phi.
        sampled_defect (float | None): Pointwise cross-check of the same identity.
        mu_exp (float | None): Residual exponent used.
    """

    rows: list[KamRow] = []
    converged: bool = False
    jet_exhausted: bool = False
    final_domain: DomainSpec
    dilation: float = 1.0
    initial_residual: float = 0.0
    within_schedule: bool = True
    conjugacy_defect: float | None = None
    sampled_defect: float | None = None
    mu_exp: float | None = None

    @property
    def steps(self) -> int:
        return len(self.rows)

    def to_dict(self, **kwargs) -> dict:
        return self.model_dump(**kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "KamReport":
        return cls.model_validate(data)

    def to_csv(self) -> str:
        """Rows as CSV with the columns k,q_k,delta_k,eps_k,r_k,residual_bound,phi_norm,dropped_mass."""
        return rows_to_csv([row.to_dict() for row in self.rows])

    def save_csv(self, path: str | Path):
        Path(path).write_text(self.to_csv())


def rows_to_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({column: row[column] for column in CSV_COLUMNS})
    return buffer.getvalue()
