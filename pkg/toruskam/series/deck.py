from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from toruskam.lattice import DomainSpec, Lattice, deck_eigenvalues
from toruskam.series.algebra import linear_map
from toruskam.series.exceptions import IncompatibleSeries
from toruskam.series.io import series_from_dict, series_to_dict
from toruskam.series.series import TaylorLaurentSeries
from toruskam.utils import decode_complex_array, encode_complex_array


class LinearDeck(BaseModel):
    """
    Diagonal linear parts of the model deck maps tau_hat_j(h, v) = (T_j h, M_j v).

    Attributes:
        lam (np.ndarray): Shape (n, n), lam[j, k] = lambda_{j,k}.
        mu (np.ndarray): Shape (n, d), mu[j, l] = mu_{j,l}.
    """

    lam: np.ndarray
    mu: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("lam", "mu", mode="before")
    @classmethod
    def decode_table(cls, value: Any) -> np.ndarray:
        array = decode_complex_array(value, ndim=2)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def validate_tables(self) -> "LinearDeck":
        n = self.lam.shape[0]
        if self.lam.shape != (n, n):
            raise ValueError(f"lam must be square, got shape {self.lam.shape}")
        if self.mu.shape[0] != n:
            raise ValueError(f"mu must have {n} rows, got shape {self.mu.shape}")
        if np.any(self.lam == 0) or np.any(self.mu == 0):
            raise ValueError("Deck eigenvalues must be nonzero")
        return self

    @classmethod
    def from_lattice(cls, lat: Lattice, mu: Any) -> "LinearDeck":
        """lambda_{j,k} = exp(2 pi i e'_{j,k}) together with the vertical table mu."""
        return cls(lam=deck_eigenvalues(lat), mu=decode_complex_array(mu, ndim=2))

    @property
    def n(self) -> int:
        return self.lam.shape[0]

    @property
    def d(self) -> int:
        return self.mu.shape[1]

    @property
    def log_lam(self) -> np.ndarray:
        return np.log(self.lam)

    @property
    def log_mu(self) -> np.ndarray:
        return np.log(self.mu)

    def component_eigenvalues(self, j: int) -> np.ndarray:
        """(lambda_{j,1}, ..., lambda_{j,n}, mu_{j,1}, ..., mu_{j,d}), the diagonal of D tau_hat_j."""
        return np.concatenate([self.lam[j], self.mu[j]])

    def log_monomials(self, keys: np.ndarray) -> np.ndarray:
        """
        log(lambda_j^P mu_j^Q) for every generator j and key row (Q, P).

        The branch of the logarithm is irrelevant because exponents are integers.

        Returns:
            np.ndarray: Shape (n, N).
        """
        keys = np.atleast_2d(np.asarray(keys, dtype=float))
        Q, P = keys[:, : self.d], keys[:, self.d:]
        return self.log_lam @ P.T + self.log_mu @ Q.T

    def multipliers(self, j: int, keys: np.ndarray) -> np.ndarray:
        """lambda_j^P mu_j^Q for each key row (Q, P)."""
        return np.exp(self.log_monomials(keys)[j])

    def to_dict(self, **kwargs) -> dict:
        return {"lam": encode_complex_array(self.lam), "mu": encode_complex_array(self.mu)}

    @classmethod
    def from_dict(cls, data: dict) -> "LinearDeck":
        return cls(lam=data["lam"], mu=data["mu"])


class DeckSystem(BaseModel):
    """
    n commuting deck maps tau_j = tau_hat_j + tau_j^bullet near the zero section.

    Attributes:
        lat (Lattice): Period data.
        linear (LinearDeck): Linear parts tau_hat_j.
        pert (list[TaylorLaurentSeries]): Perturbations tau_j^bullet, each with n + d components
            (horizontal first) and v_min >= 2.
        domain (DomainSpec): Reference domain Omega_{eps, r} for norms of the system.
    """

    lat: Lattice
    linear: LinearDeck
    pert: list[TaylorLaurentSeries]
    domain: DomainSpec = DomainSpec(eps=0.0, r=1.0)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def validate_system(self) -> "DeckSystem":
        n, d = self.linear.n, self.linear.d
        if n != self.lat.n:
            raise ValueError(f"Linear part has {n} generators for an {self.lat.n}-dimensional torus")
        if len(self.pert) != n:
            raise ValueError(f"Expected {n} perturbations, got {len(self.pert)}")
        truncation = {(f.q_max, f.p_max) for f in self.pert}
        if len(truncation) != 1:
            raise IncompatibleSeries(f"Perturbations use different truncations: {sorted(truncation)}")
        for index, f in enumerate(self.pert):
            if (f.n, f.d, f.m) != (n, d, n + d):
                raise IncompatibleSeries(f"Perturbation {index} has shape {(f.n, f.d, f.m)}, expected {(n, d, n + d)}")
            if f.v_min < 2:
                raise ValueError(f"Perturbation {index} has v_min = {f.v_min}, expected >= 2")
        return self

    @property
    def n(self) -> int:
        return self.linear.n

    @property
    def d(self) -> int:
        return self.linear.d

    @property
    def q_max(self) -> int:
        return self.pert[0].q_max

    @property
    def p_max(self) -> int:
        return self.pert[0].p_max

    @property
    def v_min(self) -> int:
        """Vanishing order of the perturbation, min over generators."""
        return min(f.v_min for f in self.pert)

    @property
    def is_linear(self) -> bool:
        return all(f.is_zero for f in self.pert)

    def with_pert(self, pert: list[TaylorLaurentSeries]) -> "DeckSystem":
        return DeckSystem(lat=self.lat, linear=self.linear, pert=pert, domain=self.domain)

    def tau(self, j: int) -> TaylorLaurentSeries:
        """tau_j = tau_hat_j + tau_j^bullet as a map-valued series."""
        return linear_map(self.linear, j, self.q_max, self.p_max) + self.pert[j]

    @classmethod
    def linear_system(
        cls, lat: Lattice, linear: LinearDeck, q_max: int, p_max: int, domain: DomainSpec | None = None
    ) -> "DeckSystem":
        """The unperturbed system tau_j = tau_hat_j."""
        zero = TaylorLaurentSeries.zeros(linear.n, linear.d, linear.n + linear.d, q_max, p_max)
        return cls(lat=lat, linear=linear, pert=[zero] * linear.n, domain=domain or DomainSpec(eps=0.0, r=1.0))

    def to_dict(self, **kwargs) -> dict:
        return {
            "lattice": self.lat.to_dict(),
            "linear": self.linear.to_dict(),
            "pert": [series_to_dict(f) for f in self.pert],
            "domain": self.domain.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DeckSystem":
        return cls(
            lat=Lattice.from_dict(data["lattice"]),
            linear=LinearDeck.from_dict(data["linear"]),
            pert=[series_from_dict(f) for f in data["pert"]],
            domain=DomainSpec(**data.get("domain", {"eps": 0.0, "r": 1.0})),
        )
