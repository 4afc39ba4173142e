import math

import numpy as np
import scipy.linalg

from toruskam.matcom.exceptions import NotCommuting, NotSingleEigenvalue, SingularMatrix
from toruskam.matcom.family import CLUSTER_TOLERANCE, CommutingFamily, simultaneous_triangularize
from toruskam.utils.logger import logger

SINGULAR_TOLERANCE = 1e-14
BRANCH_SNAP = 1e-12
EXTRA_TERMS = 3


def principal_log(value: complex) -> complex:
    """Scalar logarithm on the branch 0 <= Im log < 2 pi."""
    value = complex(value)
    if value == 0:
        raise SingularMatrix("Logarithm of zero")
    angle = math.atan2(value.imag, value.real) % (2.0 * math.pi)
    if 2.0 * math.pi - angle < BRANCH_SNAP:
        angle = 0.0
    return complex(math.log(abs(value)), angle)


def log_upper_triangular(A: np.ndarray) -> np.ndarray:
    """
    Logarithm of an upper-triangular matrix with a single eigenvalue.

    With lambda the eigenvalue and a = A - lambda I nilpotent,
    ln A = (ln lambda) I - sum_{k>0} (-a / lambda)^k / k, a finite sum; ln lambda is taken on the
    branch 0 <= Im < 2 pi.

    Args:
        A (np.ndarray): Upper-triangular nonsingular matrix.

    Returns:
        np.ndarray: ln A, with exp(ln A) = A.

    Raises:
        ValueError: If A has nonzero entries below the diagonal.
        SingularMatrix: If the eigenvalue vanishes within tolerance.
        NotSingleEigenvalue: If the diagonal entries disagree beyond tolerance.

    Example:
        >>> log_upper_triangular(np.array([[-1.0]]))
        array([[0.+3.14159265j]])
    """
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    scale = max(float(np.abs(A).max()), 1.0)
    if np.abs(np.tril(A, -1)).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("Matrix is not upper triangular")

    diagonal = np.diag(A)
    eigenvalue = complex(diagonal.mean())
    if abs(eigenvalue) <= SINGULAR_TOLERANCE * scale:
        raise SingularMatrix(f"Eigenvalue {eigenvalue} is zero within tolerance")
    spread = float(np.abs(diagonal - eigenvalue).max())
    if spread > CLUSTER_TOLERANCE * (1.0 + abs(eigenvalue)):
        raise NotSingleEigenvalue(f"Diagonal entries spread by {spread:.3e} around {eigenvalue}")

    x = -(np.triu(A) - eigenvalue * np.eye(d)) / eigenvalue
    result = principal_log(eigenvalue) * np.eye(d, dtype=complex)
    power = np.eye(d, dtype=complex)
    # exactly nilpotent inputs stop contributing after d - 1 terms
    for k in range(1, d + EXTRA_TERMS):
        power = power @ x
        result -= power / k
    return result


def commuting_logs(fam: CommutingFamily) -> list[np.ndarray]:
    """
    Pairwise commuting logarithms L_j with exp(L_j) = A_j.

    Built blockwise: the family is brought to joint block-triangular form, each single-eigenvalue
    block gets its finite-series logarithm and the result is conjugated back.

    Args:
        fam (CommutingFamily): Nonsingular commuting matrices.

    Returns:
        list[np.ndarray]: The logarithms, in family order.

    Raises:
        NotCommuting: If the family fails the commutation check.
        SingularMatrix: If some A_j is singular.
        NumericalBreakdown: If the triangularization fails.
    """
    triangular = simultaneous_triangularize(fam)
    S = triangular.S
    logs = []
    for j, mat in enumerate(triangular.tri):
        block_log = np.zeros_like(mat)
        for block in triangular.blocks:
            index = np.ix_(block, block)
            block_log[index] = log_upper_triangular(mat[index])
        logs.append(np.linalg.solve(S.T, (S @ block_log).T).T)

    for j, (log, mat) in enumerate(zip(logs, fam.mats)):
        error = np.linalg.norm(scipy.linalg.expm(log) - mat) / max(np.linalg.norm(mat), 1.0)
        if error > 1e-9:
            logger.warning(f"exp(L_{j}) reproduces A_{j} with relative error {error:.3e}")
    return logs


def check_logs_commute(logs: list[np.ndarray], tolerance: float = 1e-8) -> None:
    """
    Raises:
        NotCommuting: If two logarithms fail to commute.
    """
    family = CommutingFamily.of(logs)
    family.check_commuting(tolerance)


def flow_map(logs: list[np.ndarray], z) -> np.ndarray:
    """
    The entire map v(z) = exp(z_1 L_1 + ... + z_n L_n).

    v(0) = I, v(e_j) = exp(L_j) and v(z + z') = v(z) v(z') since the L_j commute.

    Args:
        logs (list[np.ndarray]): Pairwise commuting logarithms.
        z: Complex n-vector.

    Returns:
        np.ndarray: v(z).

    Raises:
        NotCommuting: If the logarithms do not commute.
        ValueError: If z and logs have different lengths.
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.size != len(logs):
        raise ValueError(f"Expected {len(logs)} coordinates, got {z.size}")
    if len(logs) > 1:
        try:
            check_logs_commute(logs)
        except NotCommuting:
            logger.error("flow_map requires commuting logarithms")
            raise
    generator = sum(coordinate * log for coordinate, log in zip(z, logs))
    return scipy.linalg.expm(generator)
