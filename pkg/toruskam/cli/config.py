from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from toruskam.automorphy import ConstantFactor, diagonalize_vertical
from toruskam.kam import KamParams
from toruskam.lattice import DomainSpec, Lattice
from toruskam.series import LinearDeck
from toruskam.utils import decode_complex_array, encode_complex_array


def planted_band(P0: list[int], q_max: int) -> int:
    """
    Smallest P_max that holds a resonance planted at P0 through Q_max.

    A resonant monomial v_1^{k+1} h^{k P0} gains |P0|_1 in P per vertical order and a random
    displacement gains at most 1/2, so after conjugation every coefficient satisfies
    |P - base|_1 <= |P0|_1 (|Q| - 1), with base e_k on horizontal component k.
    """
    reach = sum(abs(int(p)) for p in P0)
    return reach * (q_max - 1) + 1 if reach else 0


class BundleConfig(BaseModel):
    """
    Vertical linear data: either the eigenvalue table mu (n x d) or Hermitian commuting
    transition matrices M_1, ..., M_n to be diagonalized.
    """

    mu: np.ndarray | None = None
    hermitian: list[np.ndarray] | None = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("mu", mode="before")
    @classmethod
    def decode_mu(cls, value: Any) -> np.ndarray | None:
        return None if value is None else decode_complex_array(value, ndim=2)

    @field_validator("hermitian", mode="before")
    @classmethod
    def decode_hermitian(cls, value: Any) -> list[np.ndarray] | None:
        return None if value is None else [decode_complex_array(mat, ndim=2) for mat in value]

    @model_validator(mode="after")
    def validate_source(self) -> "BundleConfig":
        if (self.mu is None) == (self.hermitian is None):
            raise ValueError("Give exactly one of bundle.mu and bundle.hermitian")
        return self

    def mu_table(self, lat: Lattice) -> np.ndarray:
        """
        The n x d table mu_{j,l}.

        Raises:
            NotHermitian: If Hermitian generators are not Hermitian or have non-real eigenvalues.
            NotCommuting: If they do not commute.
        """
        if self.mu is not None:
            if self.mu.shape[0] != lat.n:
                raise ValueError(f"bundle.mu must have {lat.n} rows, got shape {self.mu.shape}")
            return self.mu
        if len(self.hermitian) != lat.n:
            raise ValueError(f"Expected {lat.n} Hermitian generators, got {len(self.hermitian)}")
        d = self.hermitian[0].shape[0]
        factor = ConstantFactor(lat=lat, d=d, rho=[np.eye(d, dtype=complex)] * lat.n + list(self.hermitian))
        return diagonalize_vertical(factor).mu

    def to_dict(self, **kwargs) -> dict:
        return {
            "mu": None if self.mu is None else encode_complex_array(self.mu),
            "hermitian": None if self.hermitian is None else [encode_complex_array(m) for m in self.hermitian],
        }


class InstanceConfig(BaseModel):
    """
    Synthetic instance description.

    Attributes:
        mode: conjugated (Phi_true tau_hat Phi_true^{-1}), planted-resonance (additionally an exact
            vertical resonance at (Q, P) = (2 e_1, planted_P)) or custom-file (load `path`).
        seed (int): PCG64 seed.
        pert_norm (float): Certified norm of Phi_true - Id on (eps0, r0).
        Q_max (int): Vertical truncation.
        P_max (int): Laurent band.
        terms (int): Random monomials per component and vertical order.
        phi_order (int): Highest vertical order of Phi_true - Id.
        planted_P (list[int] | None): Horizontal exponent of the planted resonance, 0 by default.
        planted_strength (float): Time of the planted resonant flow.
        path (str | None): Instance file for custom-file mode.
    """

    mode: Literal["conjugated", "planted-resonance", "custom-file"] = "conjugated"
    seed: int = 42
    pert_norm: float = Field(default=1e-3, ge=0.0)
    Q_max: int = Field(default=16, ge=2)
    P_max: int = Field(default=12, ge=1)
    terms: int = Field(default=2, ge=1)
    phi_order: int = Field(default=3, ge=2)
    planted_P: list[int] | None = None
    planted_strength: float = 1e-3
    path: str | None = None

    @model_validator(mode="after")
    def validate_mode(self) -> "InstanceConfig":
        if self.mode == "custom-file" and not self.path:
            raise ValueError("instance.path is required in custom-file mode")
        return self


class DiophConfig(BaseModel):
    """Scan cutoff and exponent of the Diophantine fit."""

    N_scan: int = Field(default=12, ge=2)
    tau_exp: float = Field(default=2.0, ge=0.0)


class OutputConfig(BaseModel):
    """Report destinations; the CLI --out option overrides report_path."""

    report_path: str | None = None
    csv_path: str | None = None


class ExperimentConfig(BaseModel):
    """
    A complete experiment: torus, bundle, instance, Diophantine scan, KAM parameters and outputs.
    """

    lattice: Lattice
    bundle: BundleConfig
    instance: InstanceConfig = InstanceConfig()
    dioph: DiophConfig = DiophConfig()
    kam: KamParams = KamParams()
    output: OutputConfig = OutputConfig()

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("lattice", mode="before")
    @classmethod
    def parse_lattice(cls, value: Any) -> Any:
        return Lattice.from_dict(value) if isinstance(value, dict) else value

    @model_validator(mode="after")
    def validate_dimensions(self) -> "ExperimentConfig":
        planted = self.instance.planted_P
        if planted is not None and len(planted) != self.lattice.n:
            raise ValueError(f"instance.planted_P must have {self.lattice.n} entries, got {len(planted)}")
        if self.instance.mode == "planted-resonance" and planted is not None:
            required = planted_band(planted, self.instance.Q_max)
            if self.instance.P_max < required:
                raise ValueError(
                    f"instance.P_max must be at least {required} to hold a resonance planted at P = {planted} "
                    f"through Q_max = {self.instance.Q_max}"
                )
        return self

    @property
    def domain(self) -> DomainSpec:
        return DomainSpec(eps=self.kam.eps0, r=self.kam.r0)

    def linear_deck(self) -> LinearDeck:
        return LinearDeck.from_lattice(self.lattice, self.bundle.mu_table(self.lattice))

    def to_dict(self, **kwargs) -> dict:
        return {
            "lattice": self.lattice.to_dict(),
            "bundle": self.bundle.to_dict(),
            "instance": self.instance.model_dump(),
            "dioph": self.dioph.model_dump(),
            "kam": self.kam.to_dict(),
            "output": self.output.model_dump(),
        }
