from typing import Any

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from toruskam.matcom.exceptions import NotCommuting, NumericalBreakdown
from toruskam.utils import decode_complex_array
from toruskam.utils.logger import logger

COMMUTATION_TOLERANCE = 1e-10
CLUSTER_TOLERANCE = 1e-8
KERNEL_TOLERANCE = 1e-7
RECONSTRUCTION_TOLERANCE = 1e-9
SEPARATION_TOLERANCE = 1e-6
# fixed so the separating combination, and hence S, is reproducible
COMBINATION_SEED = 20240611


class CommutingFamily(BaseModel):
    """
    Pairwise commuting complex d x d matrices A_1, ..., A_m.

    Attributes:
        d (int): Matrix dimension.
        mats (list[np.ndarray]): The matrices.
    """

    d: int
    mats: list[np.ndarray]

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("mats", mode="before")
    @classmethod
    def decode_mats(cls, value: Any) -> list[np.ndarray]:
        return [decode_complex_array(mat, ndim=2) for mat in value]

    @model_validator(mode="after")
    def validate_shapes(self) -> "CommutingFamily":
        if not self.mats:
            raise ValueError("A commuting family needs at least one matrix")
        for mat in self.mats:
            if mat.shape != (self.d, self.d):
                raise ValueError(f"Expected {self.d}x{self.d} matrices, got {mat.shape}")
        return self

    @classmethod
    def of(cls, mats: list[Any]) -> "CommutingFamily":
        """Build a family from matrices, inferring d."""
        mats = [decode_complex_array(mat, ndim=2) for mat in mats]
        return cls(d=mats[0].shape[0], mats=mats)

    def commutator_defect(self) -> tuple[float, tuple[int, int] | None]:
        """
        Largest ||A_i A_j - A_j A_i||_inf / max(||A_i|| ||A_j||, 1) over pairs.

        Returns:
            tuple[float, tuple[int, int] | None]: The defect and the pair attaining it.
        """
        worst, pair = 0.0, None
        for i in range(len(self.mats)):
            for j in range(i + 1, len(self.mats)):
                a, b = self.mats[i], self.mats[j]
                scale = max(np.linalg.norm(a, np.inf) * np.linalg.norm(b, np.inf), 1.0)
                defect = float(np.linalg.norm(a @ b - b @ a, np.inf)) / scale
                if defect > worst:
                    worst, pair = defect, (i, j)
        return worst, pair

    def is_commuting(self, tolerance: float = COMMUTATION_TOLERANCE) -> bool:
        return self.commutator_defect()[0] <= tolerance

    def check_commuting(self, tolerance: float = COMMUTATION_TOLERANCE) -> None:
        """
        Raises:
            NotCommuting: If some pair fails the commutation tolerance.
        """
        defect, pair = self.commutator_defect()
        if defect > tolerance:
            logger.error(f"Family is not commuting: defect {defect:.3e} on pair {pair}")
            raise NotCommuting(f"Matrices {pair} do not commute (defect {defect:.3e})", defect=defect, pair=pair)


class TriangularizedFamily(BaseModel):
    """
    Simultaneous block-triangular form S^{-1} A_j S = tri_j of a commuting family.

    Each block (a set of consecutive coordinates) carries one joint eigenvalue per matrix;
    tri_j is block diagonal and every block is upper triangular.

    Attributes:
        S (np.ndarray): Invertible change of basis.
        tri (list[np.ndarray]): Upper-triangular, block-diagonal matrices.
        blocks (list[list[int]]): Coordinate indices of each joint-eigenvalue block.
        eigenvalues (np.ndarray): Shape (m, number of blocks), eigenvalue of tri_j on each block.
    """

    S: np.ndarray
    tri: list[np.ndarray]
    blocks: list[list[int]]
    eigenvalues: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def reconstruct(self, j: int) -> np.ndarray:
        """S tri_j S^{-1}."""
        return np.linalg.solve(self.S.T, (self.S @ self.tri[j]).T).T


def _kernel(mat: np.ndarray, tolerance: float = KERNEL_TOLERANCE) -> np.ndarray:
    _, sigma, vh = scipy.linalg.svd(mat)
    scale = max(float(sigma[0]), 1.0) if sigma.size else 1.0
    rank = int(np.sum(sigma > tolerance * scale))
    return vh[rank:].conj().T


def _common_eigenvector(mats: list[np.ndarray]) -> np.ndarray:
    # eigenspaces of one member inside a common invariant subspace stay invariant for the others
    k = mats[0].shape[0]
    basis = np.eye(k, dtype=complex)
    for mat in mats:
        if basis.shape[1] == 1:
            break
        restricted = basis.conj().T @ mat @ basis
        size = restricted.shape[0]
        eigenvalue = scipy.linalg.eigvals(restricted)[0]
        kernel = _kernel(restricted - eigenvalue * np.eye(size))
        if kernel.shape[1] == size:
            continue
        if kernel.shape[1] == 0:
            raise NumericalBreakdown(f"No eigenvector found for eigenvalue {eigenvalue} within tolerance")
        basis = basis @ kernel
    return basis[:, 0]


def _triangularize(mats: list[np.ndarray]) -> np.ndarray:
    k = mats[0].shape[0]
    if k == 1:
        return np.eye(1, dtype=complex)
    vector = _common_eigenvector(mats)
    deflation, _ = scipy.linalg.qr(vector.reshape(-1, 1))
    deflation = deflation.astype(complex)
    transformed = [deflation.conj().T @ mat @ deflation for mat in mats]
    inner = _triangularize([mat[1:, 1:] for mat in transformed])
    return deflation @ scipy.linalg.block_diag(np.eye(1), inner)


def _same_eigenvalues(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.all(np.abs(a - b) <= CLUSTER_TOLERANCE * (1.0 + np.abs(a))))


def _group_diagonal(tri: list[np.ndarray]) -> list[int]:
    diagonals = np.array([np.diag(mat) for mat in tri]).T
    representatives: list[np.ndarray] = []
    groups = []
    for row in diagonals:
        for index, representative in enumerate(representatives):
            if _same_eigenvalues(representative, row):
                groups.append(index)
                break
        else:
            representatives.append(row)
            groups.append(len(representatives) - 1)
    return groups


def _swap_adjacent(tri: list[np.ndarray], unitary: np.ndarray, p: int) -> np.ndarray:
    gaps = [abs(mat[p, p] - mat[p + 1, p + 1]) for mat in tri]
    pivot = tri[int(np.argmax(gaps))]
    a, b, c = pivot[p, p], pivot[p, p + 1], pivot[p + 1, p + 1]
    x = np.array([b, c - a], dtype=complex)
    x /= np.linalg.norm(x)
    rotation = np.eye(unitary.shape[0], dtype=complex)
    rotation[p:p + 2, p:p + 2] = [[x[0], -np.conj(x[1])], [x[1], np.conj(x[0])]]
    for index, mat in enumerate(tri):
        swapped = rotation.conj().T @ mat @ rotation
        swapped[p + 1, p] = 0.0
        tri[index] = swapped
    return unitary @ rotation


def _sort_by_group(tri: list[np.ndarray], unitary: np.ndarray, groups: list[int]) -> np.ndarray:
    groups = list(groups)
    changed = True
    while changed:
        changed = False
        for p in range(len(groups) - 1):
            if groups[p] > groups[p + 1]:
                unitary = _swap_adjacent(tri, unitary, p)
                groups[p], groups[p + 1] = groups[p + 1], groups[p]
                changed = True
    return unitary


def _generic_combination(eigenvalues: np.ndarray) -> np.ndarray:
    rng = np.random.default_rng(COMBINATION_SEED)
    best, best_gap = None, -1.0
    for _ in range(16):
        weights = rng.standard_normal(eigenvalues.shape[0]) + 1j * rng.standard_normal(eigenvalues.shape[0])
        values = weights @ eigenvalues
        scale = max(float(np.abs(values).max()), 1.0)
        gaps = np.abs(values[:, None] - values[None, :])
        np.fill_diagonal(gaps, np.inf)
        gap = float(gaps.min()) / scale if values.size > 1 else np.inf
        if gap > best_gap:
            best, best_gap = weights, gap
        if gap > SEPARATION_TOLERANCE:
            break
    if best_gap <= SEPARATION_TOLERANCE:
        raise NumericalBreakdown("Joint eigenvalue blocks could not be separated by a linear combination")
    return best


def _decouple(tri: list[np.ndarray], basis: np.ndarray, blocks: list[list[int]], eigenvalues: np.ndarray):
    weights = _generic_combination(eigenvalues)
    d = basis.shape[0]
    for block in blocks[:-1]:
        lo, hi = block[0], block[-1] + 1
        combination = sum(w * mat for w, mat in zip(weights, tri))
        coupling = scipy.linalg.solve_sylvester(
            combination[lo:hi, lo:hi], -combination[hi:, hi:], -combination[lo:hi, hi:]
        )
        shear = np.eye(d, dtype=complex)
        shear[lo:hi, hi:] = coupling
        inverse = np.eye(d, dtype=complex)
        inverse[lo:hi, hi:] = -coupling
        for index, mat in enumerate(tri):
            decoupled = inverse @ mat @ shear
            decoupled[lo:hi, hi:] = 0.0
            tri[index] = decoupled
        basis = basis @ shear
    return basis


def simultaneous_triangularize(fam: CommutingFamily) -> TriangularizedFamily:
    """
    Simultaneous triangularization of a commuting family, split into joint eigen-blocks.

    A common eigenvector is found inside successive eigenspaces, the family is deflated by a
    unitary completion and the procedure recurses. Coordinates are then regrouped by joint
    eigenvalue (order of first appearance) with unitary adjacent swaps, and the blocks are
    decoupled by Sylvester solves against a generic linear combination of the family.

    Args:
        fam (CommutingFamily): Family to triangularize.

    Returns:
        TriangularizedFamily: S, block-diagonal upper-triangular tri_j, blocks and eigenvalue table.

    Raises:
        NotCommuting: If the family fails the commutation check.
        NumericalBreakdown: If no common eigenvector is found or blocks cannot be separated.
    """
    fam.check_commuting()
    mats = [np.asarray(mat, dtype=complex) for mat in fam.mats]
    d = fam.d

    if all(np.allclose(mat, mat[0, 0] * np.eye(d), rtol=0.0, atol=1e-14 * max(1.0, abs(mat[0, 0]))) for mat in mats):
        tri = [np.diag(np.diag(mat)) for mat in mats]
        eigenvalues = np.array([[np.diag(mat).mean()] for mat in mats])
        return TriangularizedFamily(
            S=np.eye(d, dtype=complex), tri=tri, blocks=[list(range(d))], eigenvalues=eigenvalues
        )

    unitary = _triangularize(mats)
    tri = [np.triu(unitary.conj().T @ mat @ unitary) for mat in mats]

    groups = _group_diagonal(tri)
    unitary = _sort_by_group(tri, unitary, groups)
    groups = sorted(groups)
    tri = [np.triu(mat) for mat in tri]

    blocks = [[index for index, group in enumerate(groups) if group == label] for label in sorted(set(groups))]
    eigenvalues = np.array([[np.diag(mat)[block].mean() for block in blocks] for mat in tri])

    basis = unitary
    if len(blocks) > 1:
        basis = _decouple(tri, unitary, blocks, eigenvalues)
    tri = [np.triu(mat) for mat in tri]

    result = TriangularizedFamily(S=basis, tri=tri, blocks=blocks, eigenvalues=eigenvalues)
    for index, mat in enumerate(mats):
        error = np.linalg.norm(result.reconstruct(index) - mat) / max(np.linalg.norm(mat), 1.0)
        if error > RECONSTRUCTION_TOLERANCE:
            logger.warning(f"Triangularization of matrix {index} reconstructs with relative error {error:.3e}")
    logger.debug(f"Triangularized family of {len(mats)} matrices into blocks {[len(b) for b in blocks]}")
    return result
