from typing import Any, Iterable

import numpy as np

from toruskam.series.exceptions import IncompatibleSeries, PBandOverflow
from toruskam.utils.logger import logger

# pending rows an accumulator holds before merging duplicate keys
REDUCE_ROWS = 2_000_000


class KeyCodec:
    """
    Mixed-radix integer codes for (Q, P) keys.

    Q entries range over 0..q_max and P entries over -p_max..p_max; the first column is the most
    significant digit, so code order equals lexicographic (Q, P) order.
    """

    def __init__(self, n: int, d: int, q_max: int, p_max: int):
        self.n, self.d, self.q_max, self.p_max = n, d, q_max, p_max
        self.radix = np.array([q_max + 1] * d + [2 * p_max + 1] * n, dtype=np.int64)
        self.offset = np.array([0] * d + [p_max] * n, dtype=np.int64)

    def encode(self, keys: np.ndarray) -> np.ndarray:
        codes = np.zeros(keys.shape[0], dtype=np.int64)
        for column in range(keys.shape[1]):
            codes = codes * self.radix[column] + (keys[:, column] + self.offset[column])
        return codes

    def decode(self, codes: np.ndarray) -> np.ndarray:
        keys = np.zeros((codes.shape[0], self.radix.size), dtype=np.int64)
        rest = codes.copy()
        for column in range(self.radix.size - 1, -1, -1):
            rest, digit = np.divmod(rest, self.radix[column])
            keys[:, column] = digit - self.offset[column]
        return keys


class Accumulator:
    """
    Collects (key, coefficient) rows, sums duplicates and tracks band overflow.

    Rows with |Q| > q_max are dropped silently (jet truncation); rows with |P|_inf > p_max are
    dropped and their l1 mass is added to `dropped_mass`.
    """

    def __init__(self, n: int, d: int, m: int, q_max: int, p_max: int):
        self.n, self.d, self.m = n, d, m
        self.q_max, self.p_max = q_max, p_max
        self.codec = KeyCodec(n, d, q_max, p_max)
        self.codes: list[np.ndarray] = []
        self.coeffs: list[np.ndarray] = []
        self.rows = 0
        self.dropped_mass = 0.0

    def add(self, keys: np.ndarray, coeffs: np.ndarray):
        if keys.shape[0] == 0:
            return
        degree = keys[:, : self.d].sum(axis=1)
        keep = degree <= self.q_max
        if self.n:
            in_band = np.abs(keys[:, self.d:]).max(axis=1) <= self.p_max
            overflow = keep & ~in_band
            if overflow.any():
                self.dropped_mass += float(np.abs(coeffs[overflow]).sum())
            keep &= in_band
        if not keep.all():
            keys, coeffs = keys[keep], coeffs[keep]
        if keys.shape[0] == 0:
            return
        self.codes.append(self.codec.encode(keys))
        self.coeffs.append(np.broadcast_to(coeffs, (keys.shape[0], self.m)))
        self.rows += keys.shape[0]
        if self.rows > REDUCE_ROWS:
            self._reduce()

    def add_series(self, series: "TaylorLaurentSeries"):
        self.add(series.keys, series.coeffs)
        self.dropped_mass += series.dropped_mass

    def _reduce(self):
        if not self.codes:
            return
        codes = np.concatenate(self.codes)
        coeffs = np.concatenate(self.coeffs)
        unique, inverse = np.unique(codes, return_inverse=True)
        summed = np.zeros((unique.size, self.m), dtype=complex)
        np.add.at(summed, inverse.reshape(-1), coeffs)
        self.codes, self.coeffs, self.rows = [unique], [summed], unique.size

    def result(self) -> "TaylorLaurentSeries":
        self._reduce()
        if self.codes:
            codes, coeffs = self.codes[0], self.coeffs[0]
            nonzero = np.any(coeffs != 0, axis=1)
            keys = self.codec.decode(codes[nonzero])
            coeffs = coeffs[nonzero]
        else:
            keys = np.zeros((0, self.n + self.d), dtype=np.int64)
            coeffs = np.zeros((0, self.m), dtype=complex)
        return TaylorLaurentSeries._trusted(
            self.n, self.d, self.m, self.q_max, self.p_max, keys, coeffs, self.dropped_mass
        )


class TaylorLaurentSeries:
    """
    Truncated series sum c_{Q,P} h^P v^Q with P in Z^n, Q in N^d and m-vector coefficients.

    Coefficients are stored sparsely: `keys` has one row (Q_1..Q_d, P_1..P_n) per nonzero term,
    sorted lexicographically, and `coeffs` the matching complex m-vectors. Instances are
    immutable. Terms with |Q| > q_max are outside the jet and never stored; terms with
    |P|_inf > p_max are outside the Laurent band and are either refused (strict) or dropped with
    their mass recorded in `dropped_mass`.
    """

    __slots__ = ("n", "d", "m", "q_max", "p_max", "keys", "coeffs", "dropped_mass")

    def __init__(
        self,
        n: int,
        d: int,
        m: int,
        q_max: int,
        p_max: int,
        keys: Any = None,
        coeffs: Any = None,
        strict: bool = True,
    ):
        keys = np.zeros((0, n + d), dtype=np.int64) if keys is None else np.asarray(keys, dtype=np.int64)
        coeffs = np.zeros((0, m), dtype=complex) if coeffs is None else np.asarray(coeffs, dtype=complex)
        keys = keys.reshape(-1, n + d)
        coeffs = coeffs.reshape(keys.shape[0], m)
        if np.any(keys[:, :d] < 0):
            raise ValueError("Vertical exponents Q must be nonnegative")
        accumulator = Accumulator(n, d, m, q_max, p_max)
        accumulator.add(keys, coeffs)
        if strict and accumulator.dropped_mass > 0:
            raise PBandOverflow(
                f"Coefficients outside the band |P| <= {p_max}", dropped_mass=accumulator.dropped_mass
            )
        built = accumulator.result()
        self._assign(n, d, m, q_max, p_max, built.keys, built.coeffs, built.dropped_mass)

    def _assign(self, n, d, m, q_max, p_max, keys, coeffs, dropped_mass):
        keys.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "q_max", q_max)
        object.__setattr__(self, "p_max", p_max)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "dropped_mass", float(dropped_mass))

    def __setattr__(self, name, value):
        raise AttributeError("TaylorLaurentSeries is immutable")

    @classmethod
    def _trusted(cls, n, d, m, q_max, p_max, keys, coeffs, dropped_mass=0.0) -> "TaylorLaurentSeries":
        """Wrap arrays that are already canonical (sorted, unique, nonzero, in band)."""
        series = cls.__new__(cls)
        series._assign(n, d, m, q_max, p_max, np.ascontiguousarray(keys), np.ascontiguousarray(coeffs), dropped_mass)
        return series

    # constructors

    @classmethod
    def zeros(cls, n: int, d: int, m: int, q_max: int, p_max: int) -> "TaylorLaurentSeries":
        return cls._trusted(
            n, d, m, q_max, p_max, np.zeros((0, n + d), dtype=np.int64), np.zeros((0, m), dtype=complex)
        )

    @classmethod
    def monomial(
        cls, n: int, d: int, Q: Iterable[int], P: Iterable[int], coeff: Any = 1.0, q_max: int = 8, p_max: int = 8
    ) -> "TaylorLaurentSeries":
        """c h^P v^Q; `coeff` is a scalar (m = 1) or an m-vector."""
        coeff = np.atleast_1d(np.asarray(coeff, dtype=complex))
        key = np.array([list(Q) + list(P)], dtype=np.int64)
        return cls(n, d, coeff.size, q_max, p_max, key, coeff.reshape(1, -1))

    @classmethod
    def constant(cls, n: int, d: int, value: Any, q_max: int, p_max: int) -> "TaylorLaurentSeries":
        return cls.monomial(n, d, [0] * d, [0] * n, value, q_max, p_max)

    @classmethod
    def identity(cls, n: int, d: int, q_max: int, p_max: int) -> "TaylorLaurentSeries":
        """The map (h, v) -> (h, v): component k < n is h_k, component n + j is v_j."""
        m = n + d
        keys = np.zeros((m, m), dtype=np.int64)
        for k in range(n):
            keys[k, d + k] = 1
        for j in range(d):
            keys[n + j, j] = 1
        return cls(n, d, m, q_max, p_max, keys, np.eye(m, dtype=complex))

    @classmethod
    def from_terms(
        cls, n: int, d: int, m: int, q_max: int, p_max: int, terms: dict, strict: bool = True
    ) -> "TaylorLaurentSeries":
        """Build from a mapping {(Q, P): m-vector}."""
        if not terms:
            return cls.zeros(n, d, m, q_max, p_max)
        keys = np.array([list(Q) + list(P) for Q, P in terms], dtype=np.int64)
        coeffs = np.array([np.broadcast_to(np.asarray(c, dtype=complex), (m,)) for c in terms.values()])
        return cls(n, d, m, q_max, p_max, keys, coeffs, strict=strict)

    # views

    @property
    def Q(self) -> np.ndarray:
        return self.keys[:, : self.d]

    @property
    def P(self) -> np.ndarray:
        return self.keys[:, self.d:]

    @property
    def degrees(self) -> np.ndarray:
        """|Q| of every stored term."""
        return self.keys[:, : self.d].sum(axis=1)

    @property
    def is_zero(self) -> bool:
        return self.keys.shape[0] == 0

    @property
    def v_min(self) -> int:
        """Smallest |Q| with a nonzero coefficient; q_max + 1 for the zero series."""
        return int(self.degrees.min()) if not self.is_zero else self.q_max + 1

    @property
    def v_max(self) -> int:
        return int(self.degrees.max()) if not self.is_zero else -1

    def __len__(self) -> int:
        return self.keys.shape[0]

    def __repr__(self) -> str:
        return (
            f"TaylorLaurentSeries(n={self.n}, d={self.d}, m={self.m}, q_max={self.q_max}, p_max={self.p_max}, "
            f"terms={len(self)}, v_min={self.v_min})"
        )

    def terms(self) -> dict[tuple[tuple[int, ...], tuple[int, ...]], np.ndarray]:
        """{(Q, P): coefficient vector} in lexicographic order."""
        return {
            (tuple(int(q) for q in key[: self.d]), tuple(int(p) for p in key[self.d:])): coeff
            for key, coeff in zip(self.keys, self.coeffs)
        }

    def coefficient(self, Q: Iterable[int], P: Iterable[int]) -> np.ndarray:
        """Coefficient vector at (Q, P); zeros when the key is absent."""
        key = np.array(list(Q) + list(P), dtype=np.int64)
        match = np.flatnonzero(np.all(self.keys == key, axis=1))
        if match.size:
            return self.coeffs[match[0]].copy()
        return np.zeros(self.m, dtype=complex)

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max()) if not self.is_zero else 0.0

    # structure

    def like(self, keys: np.ndarray, coeffs: np.ndarray, m: int | None = None, strict: bool = True):
        """A series with the same dimensions and truncation built from raw rows."""
        return TaylorLaurentSeries(self.n, self.d, m or self.m, self.q_max, self.p_max, keys, coeffs, strict=strict)

    def with_coeffs(self, coeffs: np.ndarray) -> "TaylorLaurentSeries":
        """Same keys, new coefficients (rows that become zero are removed)."""
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        nonzero = np.any(coeffs != 0, axis=1)
        return TaylorLaurentSeries._trusted(
            self.n, self.d, coeffs.shape[1], self.q_max, self.p_max,
            self.keys[nonzero], coeffs[nonzero], self.dropped_mass,
        )

    def component(self, index: int) -> "TaylorLaurentSeries":
        return self.with_coeffs(self.coeffs[:, index: index + 1])

    def components(self) -> list["TaylorLaurentSeries"]:
        return [self.component(index) for index in range(self.m)]

    def select(self, mask: np.ndarray) -> "TaylorLaurentSeries":
        return TaylorLaurentSeries._trusted(
            self.n, self.d, self.m, self.q_max, self.p_max, self.keys[mask], self.coeffs[mask], self.dropped_mass
        )

    def jet_truncate(self, q: int) -> "TaylorLaurentSeries":
        """Drop every term with |Q| > q."""
        if q < 0:
            raise ValueError(f"Jet order must be nonnegative, got {q}")
        return self.select(self.degrees <= q)

    def drop_below(self, q: int) -> "TaylorLaurentSeries":
        """Drop every term with |Q| < q."""
        return self.select(self.degrees >= q)

    def with_truncation(self, q_max: int | None = None, p_max: int | None = None, strict: bool = True):
        """Same terms under another truncation (terms beyond a lowered q_max are dropped)."""
        return TaylorLaurentSeries(
            self.n, self.d, self.m, self.q_max if q_max is None else q_max, self.p_max if p_max is None else p_max,
            self.keys, self.coeffs, strict=strict,
        )

    def shift_p(self, delta: Iterable[int]) -> "TaylorLaurentSeries":
        """Multiply by h^delta; terms leaving the band are dropped and their mass recorded."""
        shift = np.zeros(self.n + self.d, dtype=np.int64)
        shift[self.d:] = np.asarray(list(delta), dtype=np.int64)
        result = self.like(self.keys + shift, self.coeffs, strict=False)
        return result.add_dropped(self.dropped_mass)

    def add_dropped(self, mass: float) -> "TaylorLaurentSeries":
        return TaylorLaurentSeries._trusted(
            self.n, self.d, self.m, self.q_max, self.p_max, self.keys, self.coeffs, self.dropped_mass + mass
        )

    def clear_dropped(self) -> "TaylorLaurentSeries":
        return TaylorLaurentSeries._trusted(self.n, self.d, self.m, self.q_max, self.p_max, self.keys, self.coeffs)

    @staticmethod
    def stack(parts: list["TaylorLaurentSeries"]) -> "TaylorLaurentSeries":
        """Concatenate components of series sharing dimensions and truncation."""
        first = parts[0]
        m = sum(part.m for part in parts)
        accumulator = Accumulator(first.n, first.d, m, first.q_max, first.p_max)
        offset = 0
        for part in parts:
            _check_compatible(first, part, same_m=False)
            coeffs = np.zeros((len(part), m), dtype=complex)
            coeffs[:, offset: offset + part.m] = part.coeffs
            accumulator.add(part.keys, coeffs)
            accumulator.dropped_mass += part.dropped_mass
            offset += part.m
        return accumulator.result()

    # linear structure

    def _combine(self, other: "TaylorLaurentSeries", sign: float) -> "TaylorLaurentSeries":
        _check_compatible(self, other)
        accumulator = Accumulator(self.n, self.d, self.m, self.q_max, self.p_max)
        accumulator.add_series(self)
        accumulator.add(other.keys, sign * other.coeffs)
        accumulator.dropped_mass += other.dropped_mass
        return accumulator.result()

    def __add__(self, other: "TaylorLaurentSeries") -> "TaylorLaurentSeries":
        return self._combine(other, 1.0)

    def __sub__(self, other: "TaylorLaurentSeries") -> "TaylorLaurentSeries":
        return self._combine(other, -1.0)

    def __neg__(self) -> "TaylorLaurentSeries":
        return self.with_coeffs(-self.coeffs)

    def scale(self, factor: complex) -> "TaylorLaurentSeries":
        if factor == 0:
            return TaylorLaurentSeries.zeros(self.n, self.d, self.m, self.q_max, self.p_max)
        return self.with_coeffs(self.coeffs * factor)

    def __mul__(self, other: Any) -> "TaylorLaurentSeries":
        if isinstance(other, TaylorLaurentSeries):
            from toruskam.series.algebra import mul

            return mul(self, other)
        return self.scale(complex(other))

    def __rmul__(self, other: Any) -> "TaylorLaurentSeries":
        return self.scale(complex(other))

    def allclose(self, other: "TaylorLaurentSeries", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        """Coefficientwise comparison over the union of supports."""
        difference = self - other
        if difference.is_zero:
            return True
        scale = max(self.max_abs(), other.max_abs())
        return difference.max_abs() <= atol + rtol * scale

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TaylorLaurentSeries):
            return NotImplemented
        return (
            (self.n, self.d, self.m, self.q_max, self.p_max) == (other.n, other.d, other.m, other.q_max, other.p_max)
            and np.array_equal(self.keys, other.keys)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None


def _check_compatible(a: TaylorLaurentSeries, b: TaylorLaurentSeries, same_m: bool = True):
    if (a.n, a.d) != (b.n, b.d):
        raise IncompatibleSeries(f"Dimension mismatch: (n, d) = {(a.n, a.d)} vs {(b.n, b.d)}")
    if (a.q_max, a.p_max) != (b.q_max, b.p_max):
        raise IncompatibleSeries(f"Truncation mismatch: {(a.q_max, a.p_max)} vs {(b.q_max, b.p_max)}")
    if same_m and a.m != b.m:
        raise IncompatibleSeries(f"Component count mismatch: {a.m} vs {b.m}")


def check_band(series: TaylorLaurentSeries, strict: bool, context: str = "") -> TaylorLaurentSeries:
    """
    Enforce the overflow policy on a freshly computed series.

    Raises:
        PBandOverflow: If strict and the series dropped out-of-band mass.
    """
    if series.dropped_mass > 0:
        if strict:
            logger.error(f"{context}: Laurent band overflow, dropped mass {series.dropped_mass:.3e}")
            raise PBandOverflow(
                f"{context}: coefficients left the band |P| <= {series.p_max}", dropped_mass=series.dropped_mass
            )
        logger.warning(f"{context}: Laurent band overflow tolerated, dropped mass {series.dropped_mass:.3e}")
    return series
