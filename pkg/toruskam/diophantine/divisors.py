import itertools
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel

from toruskam.diophantine.exceptions import NotUnimodular
from toruskam.series.deck import LinearDeck

RESONANCE_TOLERANCE = 1e-13


class DivisorRecord(BaseModel):
    """
    One small divisor max_l |lambda_l^P mu_l^Q - t_l| and the index l realizing it.

    Attributes:
        P (list[int]): Horizontal exponent in Z^n.
        Q (list[int]): Vertical exponent in N^d.
        kind (Literal["h", "v"]): Horizontal target lambda_{l,i} or vertical target mu_{l,j}.
        target (int): Zero-based i or j.
        value (float): The divisor.
        argmax (int): Zero-based generator index l attaining the maximum, first on ties.
    """

    P: list[int]
    Q: list[int]
    kind: Literal["h", "v"]
    target: int
    value: float
    argmax: int

    @property
    def order(self) -> int:
        """|P| + |Q| with the l1 norm."""
        return sum(abs(p) for p in self.P) + sum(self.Q)

    def to_dict(self, **kwargs) -> dict:
        return self.model_dump(**kwargs)


def component_index(deck: LinearDeck, kind: str, target: int) -> int:
    """Column of the divisor table for a target: horizontal targets first, then vertical."""
    if kind == "h":
        if not 0 <= target < deck.n:
            raise ValueError(f"Horizontal target {target} out of range")
        return target
    if kind == "v":
        if not 0 <= target < deck.d:
            raise ValueError(f"Vertical target {target} out of range")
        return deck.n + target
    raise ValueError(f"Unknown target kind {kind!r}")


def divisor_table(deck: LinearDeck, keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    All divisors for a batch of (Q, P) key rows against every target.

    |lambda_l^P mu_l^Q - t_l| is evaluated as |t_l| |expm1(log(lambda_l^P mu_l^Q) - log t_l)|, so
    the monomial is never formed explicitly: no overflow for large |P| and no cancellation near
    resonance.

    Args:
        deck (LinearDeck): Linear data.
        keys (np.ndarray): Shape (N, d + n), Q columns first.

    Returns:
        tuple[np.ndarray, np.ndarray]: Divisor values and argmax indices, both of shape (N, n + d).
    """
    keys = np.asarray(keys, dtype=np.int64).reshape(-1, deck.d + deck.n)
    targets = np.concatenate([deck.lam, deck.mu], axis=1)
    log_monomials = deck.log_monomials(keys)
    with np.errstate(over="ignore", invalid="ignore"):
        gaps = np.expm1(log_monomials[:, :, None] - np.log(targets)[:, None, :])
        values = np.abs(targets)[:, None, :] * np.abs(gaps)
    values = np.where(np.isnan(values), np.inf, values)
    return values.max(axis=0), values.argmax(axis=0)


def small_divisor(deck: LinearDeck, P: Any, Q: Any, kind: Literal["h", "v"], target: int) -> DivisorRecord:
    """
    The divisor of one (P, Q) against a horizontal or vertical target, with its argmax index.

    Example:
        >>> deck = LinearDeck(lam=[[np.exp(-2 * np.pi)]], mu=[[0.5]])
        >>> record = small_divisor(deck, [1], [2], "h", 0)
        >>> round(record.value / (0.75 * np.exp(-2 * np.pi)), 12)
        1.0
    """
    P, Q = [int(p) for p in P], [int(q) for q in Q]
    column = component_index(deck, kind, target)
    values, argmax = divisor_table(deck, np.array([Q + P], dtype=np.int64))
    return DivisorRecord(
        P=P, Q=Q, kind=kind, target=target, value=float(values[0, column]), argmax=int(argmax[0, column])
    )


def p_vectors(n: int, radius: int) -> np.ndarray:
    """All P in Z^n with |P|_1 <= radius, lexicographically ordered."""
    grid = np.array(list(itertools.product(range(-radius, radius + 1), repeat=n)), dtype=np.int64).reshape(-1, n)
    return grid[np.abs(grid).sum(axis=1) <= radius]


def q_vectors(d: int, low: int, high: int) -> np.ndarray:
    """All Q in N^d with low <= |Q| <= high."""
    grid = np.array(list(itertools.product(range(high + 1), repeat=d)), dtype=np.int64).reshape(-1, d)
    total = grid.sum(axis=1)
    return grid[(total >= low) & (total <= high)]


def scan_keys(n: int, d: int, N: int, q_low: int = 2, q_high: int | None = None) -> np.ndarray:
    """
    Key rows (Q, P) with |P| + |Q| <= N and q_low <= |Q| <= q_high.

    Returns:
        np.ndarray: Shape (K, d + n), ordered by Q then P.
    """
    q_high = N if q_high is None else min(q_high, N)
    rows = []
    for Q in q_vectors(d, q_low, q_high):
        P = p_vectors(n, N - int(Q.sum()))
        rows.append(np.hstack([np.broadcast_to(Q, (P.shape[0], d)), P]))
    if not rows:
        return np.zeros((0, d + n), dtype=np.int64)
    return np.vstack(rows)


def change_generators(deck: LinearDeck, A: Any) -> LinearDeck:
    """
    Linear data of the deck group with respect to new generators e~_l = sum_k a_{l,k} e'_k.

    lambda~_{l,i} = prod_k lambda_{k,i}^{a_{l,k}} and likewise for mu.

    Raises:
        NotUnimodular: If A is not an integer matrix with determinant +-1.
    """
    A = np.asarray(A)
    if A.shape != (deck.n, deck.n):
        raise NotUnimodular(f"Expected a {deck.n}x{deck.n} matrix, got shape {A.shape}")
    if not np.allclose(A, np.round(A), atol=0):
        raise NotUnimodular("Generator change matrix must have integer entries")
    A = np.round(A).astype(np.int64)
    det = round(float(np.linalg.det(A)))
    if abs(det) != 1:
        raise NotUnimodular(f"Generator change matrix has determinant {det}")
    return LinearDeck(lam=np.exp(A @ deck.log_lam), mu=np.exp(A @ deck.log_mu))
