import math

import numpy as np
from more_itertools import chunked
from pydantic import BaseModel, ConfigDict

from toruskam.diophantine.divisors import RESONANCE_TOLERANCE, DivisorRecord, divisor_table, scan_keys
from toruskam.diophantine.exceptions import ResonantInput
from toruskam.executors import ThreadExecutor
from toruskam.series.deck import LinearDeck
from toruskam.utils.logger import logger

SCAN_CHUNK_SIZE = 4096


class DiophantineFit(BaseModel):
    """
    Finite-range proxy for the Diophantine condition.

    Attributes:
        tau_exp (float): Exponent tau.
        D_fit (float): min over scanned records of value (|P| + |Q|)^tau; inf when nothing was scanned.
        N_scan (int): Cutoff on |P| + |Q|.
        worst (DivisorRecord | None): Record attaining D_fit.
        records (int): Number of scanned (key, target) pairs.
    """

    tau_exp: float
    D_fit: float
    N_scan: int
    worst: DivisorRecord | None = None
    records: int = 0

    def to_dict(self, **kwargs) -> dict:
        return {
            "tau_exp": self.tau_exp,
            "D_fit": self.D_fit,
            "N_scan": self.N_scan,
            "worst": self.worst.to_dict() if self.worst else None,
            "records": self.records,
        }


class ScanTable(BaseModel):
    """Scanned key rows and their divisor table."""

    keys: np.ndarray
    values: np.ndarray
    argmax: np.ndarray
    n: int
    d: int

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def record(self, row: int, column: int) -> DivisorRecord:
        key = self.keys[row]
        kind, target = ("h", column) if column < self.n else ("v", column - self.n)
        return DivisorRecord(
            P=[int(p) for p in key[self.d:]],
            Q=[int(q) for q in key[: self.d]],
            kind=kind,
            target=target,
            value=float(self.values[row, column]),
            argmax=int(self.argmax[row, column]),
        )

    @property
    def orders(self) -> np.ndarray:
        return np.abs(self.keys).sum(axis=1)


def divisor_scan(
    deck: LinearDeck,
    N: int,
    q_low: int = 2,
    q_high: int | None = None,
    max_workers: int | None = None,
) -> ScanTable:
    """
    Divisor table over |P| + |Q| <= N, q_low <= |Q| <= q_high, computed chunkwise on a thread pool.

    Chunks are merged in submission order, so the table is deterministic.
    """
    keys = scan_keys(deck.n, deck.d, N, q_low=q_low, q_high=q_high)
    width = deck.n + deck.d
    if keys.shape[0] == 0:
        return ScanTable(
            keys=keys, values=np.zeros((0, width)), argmax=np.zeros((0, width), dtype=int), n=deck.n, d=deck.d
        )
    chunks = [keys[list(rows)] for rows in chunked(range(keys.shape[0]), SCAN_CHUNK_SIZE)]
    with ThreadExecutor(max_workers=max_workers) as executor:
        results = executor.map_chunks(lambda chunk: divisor_table(deck, chunk), chunks)
    values = np.vstack([result[0] for result in results])
    argmax = np.vstack([result[1] for result in results])
    logger.debug(f"Scanned {keys.shape[0]} keys with |P| + |Q| <= {N} in {len(chunks)} chunks")
    return ScanTable(keys=keys, values=values, argmax=argmax, n=deck.n, d=deck.d)


def nonresonance_scan(
    deck: LinearDeck, N: int, tolerance: float = RESONANCE_TOLERANCE, max_workers: int | None = None
) -> tuple[bool, list[DivisorRecord]]:
    """
    Check the non-resonance condition for |P| + |Q| <= N, |Q| >= 2 and every target.

    Returns:
        tuple[bool, list[DivisorRecord]]: Verdict and every record with value <= tolerance.
    """
    if N < 2:
        raise ValueError(f"Scan cutoff must be at least 2, got {N}")
    table = divisor_scan(deck, N, max_workers=max_workers)
    rows, columns = np.nonzero(table.values <= tolerance)
    witnesses = [table.record(row, column) for row, column in zip(rows, columns)]
    if witnesses:
        first = witnesses[0]
        logger.warning(f"Resonance found: {len(witnesses)} divisors vanish, first at P={first.P}, Q={first.Q}")
    else:
        logger.info(f"Non-resonant over |P| + |Q| <= {N} ({table.values.size} divisors)")
    return not witnesses, witnesses


def _fit_table(table: ScanTable, tau_exp: float, N: int) -> DiophantineFit:
    if table.values.size == 0:
        return DiophantineFit(tau_exp=tau_exp, D_fit=math.inf, N_scan=N)
    weighted = table.values * (table.orders.astype(float) ** tau_exp)[:, None]
    row, column = np.unravel_index(int(np.argmin(weighted)), weighted.shape)
    return DiophantineFit(
        tau_exp=tau_exp,
        D_fit=float(weighted[row, column]),
        N_scan=N,
        worst=table.record(row, column),
        records=int(table.values.size),
    )


def diophantine_fit(
    deck: LinearDeck,
    N: int,
    tau_exp: float,
    tolerance: float = RESONANCE_TOLERANCE,
    max_workers: int | None = None,
) -> DiophantineFit:
    """
    Largest D with value >= D / (|P| + |Q|)^tau over the scanned range.

    Raises:
        ResonantInput: If some scanned divisor is at or below the resonance tolerance.
    """
    if N < 2:
        raise ValueError(f"Scan cutoff must be at least 2, got {N}")
    table = divisor_scan(deck, N, max_workers=max_workers)
    rows, columns = np.nonzero(table.values <= tolerance)
    if rows.size:
        witnesses = [table.record(row, column) for row, column in zip(rows, columns)]
        logger.error(f"Diophantine fit requested for a resonant deck: {len(witnesses)} vanishing divisors")
        raise ResonantInput(f"{len(witnesses)} resonant divisors with |P| + |Q| <= {N}", witnesses=witnesses)
    fit = _fit_table(table, tau_exp, N)
    logger.info(f"Diophantine fit: D = {fit.D_fit:.3e} for tau = {tau_exp} over |P| + |Q| <= {N}")
    return fit


def splitting_divisor_scan(deck: LinearDeck, N: int, tau_exp: float, max_workers: int | None = None) -> DiophantineFit:
    """
    The |Q| = 1 horizontal divisors max_l |lambda_l^P mu_l^Q - lambda_{l,i}| weighted by (|P| + 1)^tau.

    Returned as a fit over the horizontal targets; D_fit is 0 at an exact tangential-normal resonance.
    """
    table = divisor_scan(deck, N, q_low=1, q_high=1, max_workers=max_workers)
    horizontal = ScanTable(
        keys=table.keys, values=table.values[:, : deck.n], argmax=table.argmax[:, : deck.n], n=deck.n, d=deck.d
    )
    return _fit_table(horizontal, tau_exp, N)


def splitting_divisor_check(
    deck: LinearDeck, N: int, tau_exp: float = 0.0, tolerance: float = RESONANCE_TOLERANCE
) -> bool:
    """True iff min value (|P| + 1)^tau over |Q| = 1, |P| + 1 <= N, horizontal targets is positive."""
    fit = splitting_divisor_scan(deck, N, tau_exp)
    ok = fit.D_fit > tolerance
    if not ok and fit.worst is not None:
        logger.warning(f"Tangential-normal resonance at P={fit.worst.P}, Q={fit.worst.Q}, i={fit.worst.target}")
    return ok


def enhanced_constant(deck: LinearDeck, fit: DiophantineFit) -> float:
    """D' = min(D_fit / B, 1/2) with B = 2 max(|lambda_{k,i}|, |mu_{k,j}|)."""
    B = 2.0 * max(float(np.abs(deck.lam).max()), float(np.abs(deck.mu).max()) if deck.mu.size else 0.0)
    return min(fit.D_fit / B, 0.5)


def enhanced_bound_holds(deck: LinearDeck, fit: DiophantineFit, rtol: float = 1e-9) -> bool:
    """
    value >= D' max_k |lambda_k^P mu_k^Q| / (|P| + |Q|)^tau on every scanned record.

    Raises:
        ValueError: If fit.D_fit is not finite.
    """
    if not math.isfinite(fit.D_fit):
        raise ValueError("Enhanced bound needs a finite D_fit")
    table = divisor_scan(deck, fit.N_scan)
    if table.values.size == 0:
        return True
    D_prime = enhanced_constant(deck, fit)
    modulus = np.exp(deck.log_monomials(table.keys).real).max(axis=0)
    bound = D_prime * modulus / table.orders.astype(float) ** fit.tau_exp
    holds = table.values >= bound[:, None] * (1.0 - rtol)
    if not holds.all():
        logger.warning(f"Enhanced small-divisor bound fails on {int((~holds).sum())} records")
    return bool(holds.all())
