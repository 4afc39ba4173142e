import itertools
import math
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from toruskam.lattice.exceptions import SingularLattice
from toruskam.utils import decode_complex_array, encode_complex_array

DET_TOLERANCE = 1e-12


class DomainSpec(BaseModel):
    """
    The shell Omega_{eps, r}: Reinhardt domain Omega_eps times the vertical polydisc of radius r.

    Attributes:
        eps (float): Enlargement of the fundamental parallelotope, nonnegative.
        r (float): Vertical polydisc radius, positive.
    """

    eps: float = Field(ge=0.0)
    r: float = Field(gt=0.0)

    def shrink(self, delta: float, kappa: float) -> "DomainSpec":
        """Domain (eps - delta/kappa, r e^{-delta}) used for solution estimates."""
        return DomainSpec(eps=max(self.eps - delta / kappa, 0.0), r=self.r * math.exp(-delta))

    def to_dict(self, **kwargs) -> dict:
        return self.model_dump(**kwargs)


class Lattice(BaseModel):
    """
    Period data of the complex torus C^n / Lambda.

    Lambda is generated by the unit vectors e_j and the rows e'_j of `e_prime`; the imaginary
    part of `e_prime` must be invertible.

    Attributes:
        n (int): Torus dimension.
        e_prime (np.ndarray): Complex n x n matrix, row j is e'_j.
    """

    n: int = Field(gt=0)
    e_prime: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("e_prime", mode="before")
    @classmethod
    def decode_e_prime(cls, value: Any) -> np.ndarray:
        """Accept nested ``[re, im]`` lists, plain numbers or complex arrays."""
        array = decode_complex_array(value, ndim=2)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ValueError(f"e_prime must be a square matrix, got shape {array.shape}")
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def validate_periods(self) -> "Lattice":
        if self.e_prime.shape != (self.n, self.n):
            raise ValueError(f"e_prime must be {self.n}x{self.n}, got {self.e_prime.shape}")
        check_nonsingular(self)
        return self

    @property
    def im(self) -> np.ndarray:
        """Im e_prime; row j spans the parallelotope direction Im e'_j."""
        return self.e_prime.imag

    def to_dict(self, **kwargs) -> dict:
        return {"n": self.n, "e_prime": encode_complex_array(self.e_prime)}

    @classmethod
    def from_dict(cls, data: dict) -> "Lattice":
        return cls(n=data["n"], e_prime=data["e_prime"])


def check_nonsingular(lat: Lattice) -> None:
    """
    Check the lattice invariant det(Im e_prime) != 0.

    Raises:
        SingularLattice: If |det(Im e_prime)| is below the tolerance.
    """
    det = abs(float(np.linalg.det(lat.im)))
    if det <= DET_TOLERANCE:
        raise SingularLattice(f"Im e_prime is singular: |det| = {det:.3e}", det=det)


def parallelotope_vertices(lat: Lattice, eps: float) -> np.ndarray:
    """
    Vertices of the parallelotope P_eps^+ = {sum_i t_i Im e'_i : t in (-eps, 1 + eps)^n}.

    Args:
        lat (Lattice): Period data.
        eps (float): Enlargement, eps >= 0.

    Returns:
        np.ndarray: Array of shape (2^n, n); row order follows `itertools.product` over
            t_i in (-eps, 1 + eps).

    Raises:
        ValueError: If eps is negative.
    """
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    corners = np.array(list(itertools.product((-eps, 1.0 + eps), repeat=lat.n)), dtype=float)
    return corners @ lat.im


def support_function(lat: Lattice, eps: float, P: Any) -> np.ndarray | float:
    """
    max over R in P_eps^+ of <R, P>, for one exponent vector or a stack of them.

    Args:
        lat (Lattice): Period data.
        eps (float): Enlargement.
        P (Any): Integer n-vector or array of shape (N, n).

    Returns:
        np.ndarray | float: Support values, scalar for a single vector.
    """
    P = np.asarray(P, dtype=float)
    single = P.ndim == 1
    values = (parallelotope_vertices(lat, eps) @ np.atleast_2d(P).T).max(axis=0)
    return float(values[0]) if single else values


def log_sup_h_pow(lat: Lattice, eps: float, P: Any) -> np.ndarray | float:
    """log of sup_{h in Omega_eps} |h^P|, i.e. 2 pi times the support value at -P."""
    P = np.asarray(P, dtype=float)
    return 2.0 * math.pi * support_function(lat, eps, -P)


def sup_h_pow(lat: Lattice, eps: float, P: Any) -> float:
    """
    Exact sup of |h^P| over the Reinhardt domain Omega_eps.

    |h^P| = exp(-2 pi <R, P>) with R = -log|h| / (2 pi) in P_eps^+, and a linear form attains its
    extremes at vertices, so the sup is the largest vertex value.

    Args:
        lat (Lattice): Period data.
        eps (float): Enlargement.
        P (Any): Integer n-vector, entries of either sign.

    Returns:
        float: sup_{h in Omega_eps} |h^P|.

    Example:
        >>> lat = Lattice(n=1, e_prime=[[1j]])
        >>> round(sup_h_pow(lat, 0.0, [-3]) / math.exp(6 * math.pi), 12)
        1.0
    """
    return math.exp(log_sup_h_pow(lat, eps, P))


def kappa0(lat: Lattice) -> float:
    """Separation constant sigma_min(Im e_prime) / sqrt(n)."""
    check_nonsingular(lat)
    sigma_min = float(np.linalg.svd(lat.im, compute_uv=False).min())
    return sigma_min / math.sqrt(lat.n)


def kappa(lat: Lattice) -> float:
    """
    The constant kappa = 2 pi kappa_0 converting parallelotope shrinkage into Laurent decay.

    For eps > eps' the vertex R of P_eps^+ maximizing <., P> satisfies
    <R' - R, P> <= -kappa_0 (eps - eps') |P|_1 for every R' in P_{eps'}^+.

    Raises:
        SingularLattice: If Im e_prime is singular.
    """
    return 2.0 * math.pi * kappa0(lat)


def fourier_decay_factor(lat: Lattice, eps: float, eps_prime: float, P: Any) -> float:
    """
    inf_{R in P_eps^+} sup_{R' in P_eps'^+} exp(-2 pi <R - R', P>), by vertex enumeration.

    Bounded above by exp(-kappa (eps - eps') |P|_1) whenever eps > eps'.
    """
    exponent = support_function(lat, eps_prime, P) - support_function(lat, eps, P)
    return math.exp(2.0 * math.pi * exponent)


def deck_eigenvalues(lat: Lattice) -> np.ndarray:
    """Horizontal multipliers lambda_{j,k} = exp(2 pi i e'_{j,k}) of the model deck maps."""
    return np.exp(2j * math.pi * lat.e_prime)
