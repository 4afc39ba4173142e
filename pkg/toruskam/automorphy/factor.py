from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from toruskam.automorphy.exceptions import NonDiagonalFactor, NotHermitian
from toruskam.lattice import Lattice
from toruskam.matcom import CommutingFamily, SingularMatrix, commuting_logs, flow_map
from toruskam.matcom.family import COMBINATION_SEED
from toruskam.series import LinearDeck
from toruskam.utils import decode_complex_array, encode_complex_array
from toruskam.utils.logger import logger

HERMITIAN_TOLERANCE = 1e-10
REAL_TOLERANCE = 1e-9


class ConstantFactor(BaseModel):
    """
    Constant factor of automorphy of a flat rank-d bundle over the torus.

    `rho` lists the images of the 2n lattice generators: rho(e_1), ..., rho(e_n) followed by
    rho(e'_1), ..., rho(e'_n). For constant factors the cocycle law reduces to a commuting
    representation of the lattice.

    Attributes:
        lat (Lattice): Period data.
        d (int): Bundle rank.
        rho (list[np.ndarray]): 2n invertible d x d matrices.
    """

    lat: Lattice
    d: int
    rho: list[np.ndarray]

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("rho", mode="before")
    @classmethod
    def decode_rho(cls, value: Any) -> list[np.ndarray]:
        return [decode_complex_array(mat, ndim=2) for mat in value]

    @model_validator(mode="after")
    def validate_generators(self) -> "ConstantFactor":
        if len(self.rho) != 2 * self.lat.n:
            raise ValueError(f"Expected {2 * self.lat.n} generator images, got {len(self.rho)}")
        for mat in self.rho:
            if mat.shape != (self.d, self.d):
                raise ValueError(f"Expected {self.d}x{self.d} matrices, got {mat.shape}")
        return self

    @property
    def n(self) -> int:
        return self.lat.n

    @property
    def horizontal(self) -> list[np.ndarray]:
        """rho(e_1), ..., rho(e_n)."""
        return self.rho[: self.n]

    @property
    def vertical(self) -> list[np.ndarray]:
        """rho(e'_1), ..., rho(e'_n), the transition matrices M_j."""
        return self.rho[self.n:]

    def family(self) -> CommutingFamily:
        return CommutingFamily(d=self.d, mats=self.rho)

    def check(self) -> None:
        """
        Raises:
            NotCommuting: If the generator images do not commute.
        """
        self.family().check_commuting()

    def to_dict(self, **kwargs) -> dict:
        return {"lattice": self.lat.to_dict(), "d": self.d, "rho": [encode_complex_array(mat) for mat in self.rho]}

    @classmethod
    def from_dict(cls, data: dict) -> "ConstantFactor":
        return cls(lat=Lattice.from_dict(data["lattice"]), d=data["d"], rho=data["rho"])


def lattice_point(lat: Lattice, coeffs: Any) -> np.ndarray:
    """The point sum_j m_j e_j + sum_j m'_j e'_j of C^n for integer coordinates (m, m')."""
    coeffs = np.asarray(coeffs, dtype=int)
    return coeffs[: lat.n].astype(complex) + coeffs[lat.n:] @ lat.e_prime


def rho_of(factor: ConstantFactor, coeffs: Any) -> np.ndarray:
    """
    rho(lambda) for lambda with integer generator coordinates `coeffs`.

    Args:
        factor (ConstantFactor): Commuting generator images.
        coeffs (Any): Integer 2n-vector.

    Returns:
        np.ndarray: prod_j rho(gen_j)^{m_j}; negative powers use the inverse.
    """
    coeffs = [int(c) for c in coeffs]
    if len(coeffs) != 2 * factor.n:
        raise ValueError(f"Expected {2 * factor.n} coordinates, got {len(coeffs)}")
    result = np.eye(factor.d, dtype=complex)
    for power, mat in zip(coeffs, factor.rho):
        if power:
            result = result @ np.linalg.matrix_power(mat, power)
    return result


def generator_logs(factor: ConstantFactor) -> list[np.ndarray]:
    """Commuting logarithms of all 2n generator images."""
    return commuting_logs(factor.family())


def log_of(factor: ConstantFactor, coeffs: Any, logs: list[np.ndarray] | None = None) -> np.ndarray:
    """
    Z-linear extension ln rho(lambda) = sum_j m_j ln rho(gen_j).

    exp(log_of(m)) = rho_of(m) because the generator logarithms commute.
    """
    logs = logs if logs is not None else generator_logs(factor)
    return sum(int(m) * log for m, log in zip(coeffs, logs))


def equivalent_factor(factor: ConstantFactor, nu_logs: list[np.ndarray]) -> ConstantFactor:
    """
    The equivalent factor nu(lambda + z) rho(lambda) nu(z)^{-1} for nu(z) = exp(sum z_j N_j).

    When the N_j commute with every rho(gen) the result does not depend on z and equals
    nu(lambda) rho(lambda); it is stored on the 2n generators.
    """
    rho = []
    for index in range(2 * factor.n):
        coeffs = np.zeros(2 * factor.n, dtype=int)
        coeffs[index] = 1
        shift = flow_map(nu_logs, lattice_point(factor.lat, coeffs))
        rho.append(shift @ factor.rho[index])
    return ConstantFactor(lat=factor.lat, d=factor.d, rho=rho)


def transported_value(factor: ConstantFactor, nu_logs: list[np.ndarray], coeffs: Any, z: Any) -> np.ndarray:
    """nu(z + lambda) rho(lambda) nu(z)^{-1} at a point z, for checking z-independence."""
    z = np.asarray(z, dtype=complex)
    point = lattice_point(factor.lat, coeffs)
    before = flow_map(nu_logs, z)
    after = flow_map(nu_logs, z + point)
    return np.linalg.solve(before.T, (after @ rho_of(factor, coeffs)).T).T


def trivialize_over_cylinder(factor: ConstantFactor) -> tuple[list[np.ndarray], ConstantFactor]:
    """
    Equivalent factor that is trivial on e_1, ..., e_n.

    With A_j = rho(e_j)^{-1} and commuting logarithms L_j (taken jointly with the vertical
    generators so that they commute with every rho), v(z) = exp(sum z_j L_j) transports rho to
    rho~(lambda) = v(lambda) rho(lambda), which satisfies rho~(e_j) = I.

    Args:
        factor (ConstantFactor): Factor with nonsingular generator images.

    Returns:
        tuple[list[np.ndarray], ConstantFactor]: The flow logarithms L_1, ..., L_n and the
            trivialized factor on all 2n generators.

    Raises:
        SingularMatrix: If a generator image is singular.
        NotCommuting: If the generator images do not commute.
    """
    factor.check()
    try:
        family = [np.linalg.inv(mat) for mat in factor.horizontal] + list(factor.vertical)
    except np.linalg.LinAlgError as e:
        logger.error(f"Horizontal generator is singular. Error: {e}")
        raise SingularMatrix("Horizontal generator image is singular") from e
    logs = commuting_logs(CommutingFamily(d=factor.d, mats=family))
    flow_logs = logs[: factor.n]
    trivial = equivalent_factor(factor, flow_logs)

    identity = np.eye(factor.d)
    defect = max(float(np.abs(mat - identity).max()) for mat in trivial.horizontal)
    if defect > 1e-9:
        logger.warning(f"Trivialized horizontal generators deviate from identity by {defect:.3e}")
    logger.debug(f"Trivialized factor of rank {factor.d} over the {factor.n}-dimensional cylinder")
    return flow_logs, trivial


class VerticalFrame(BaseModel):
    """
    Common eigenframe of the vertical generators.

    Attributes:
        U (np.ndarray): Unitary change of frame, U^H rho(e'_j) U = diag(mu[j]).
        mu (np.ndarray): Shape (n, d), eigenvalue table.
    """

    U: np.ndarray
    mu: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True)


def diagonalize_vertical(factor: ConstantFactor) -> VerticalFrame:
    """
    Unitary frame diagonalizing Hermitian, pairwise commuting vertical generators.

    Args:
        factor (ConstantFactor): Factor whose rho(e'_j) are Hermitian.

    Returns:
        VerticalFrame: The frame and the real eigenvalue table mu.

    Raises:
        NotHermitian: If some vertical generator is not Hermitian, or eigenvalues are not real.
        NotCommuting: If the vertical generators do not commute.
    """
    vertical = factor.vertical
    for index, mat in enumerate(vertical):
        scale = max(float(np.abs(mat).max()), 1.0)
        if float(np.abs(mat - mat.conj().T).max()) > HERMITIAN_TOLERANCE * scale:
            raise NotHermitian(f"Vertical generator {index} is not Hermitian")
    CommutingFamily(d=factor.d, mats=vertical).check_commuting()

    rng = np.random.default_rng(COMBINATION_SEED)
    weights = rng.standard_normal(len(vertical))
    combination = sum(w * mat for w, mat in zip(weights, vertical))
    combination = (combination + combination.conj().T) / 2
    _, frame = np.linalg.eigh(combination)

    mu = np.zeros((factor.n, factor.d), dtype=complex)
    for index, mat in enumerate(vertical):
        diagonalized = frame.conj().T @ mat @ frame
        off_diagonal = float(np.abs(diagonalized - np.diag(np.diag(diagonalized))).max())
        if off_diagonal > 1e-8 * max(float(np.abs(mat).max()), 1.0):
            logger.warning(f"Vertical generator {index} is diagonal only up to {off_diagonal:.3e}")
        mu[index] = np.diag(diagonalized)
    if float(np.abs(mu.imag).max()) > REAL_TOLERANCE:
        raise NotHermitian("Vertical eigenvalues are not real")
    if np.any(np.abs(mu) == 0):
        raise NotHermitian("Vertical eigenvalues must be nonzero")
    return VerticalFrame(U=frame, mu=mu.real.astype(complex))


def vertical_eigenvalues(factor: ConstantFactor, tolerance: float = 1e-9) -> np.ndarray:
    """
    The table mu_{j,l} of a factor whose vertical generators are diagonal.

    Raises:
        NonDiagonalFactor: If some rho(e'_j) has off-diagonal entries beyond tolerance.
    """
    mu = []
    for index, mat in enumerate(factor.vertical):
        off_diagonal = float(np.abs(mat - np.diag(np.diag(mat))).max())
        if off_diagonal > tolerance * max(float(np.abs(mat).max()), 1.0):
            raise NonDiagonalFactor(f"Vertical generator {index} is not diagonal")
        mu.append(np.diag(mat))
    return np.array(mu, dtype=complex)


def linear_deck(factor: ConstantFactor) -> LinearDeck:
    """
    Linear parts of the model deck maps of a factor trivial on e_1, ..., e_n.

    Horizontal multipliers come from the lattice; the vertical ones are the diagonal entries of
    rho(e'_j), so the factor must already be trivialized and diagonal.

    Raises:
        NonDiagonalFactor: If some rho(e'_j) is not diagonal.
    """
    identity = np.eye(factor.d)
    defect = max((float(np.abs(mat - identity).max()) for mat in factor.horizontal), default=0.0)
    if defect > 1e-9:
        logger.warning(f"Horizontal generators are not trivial (defect {defect:.3e}); using vertical data only")
    return LinearDeck.from_lattice(factor.lat, vertical_eigenvalues(factor))
