import itertools
import math
from typing import Any, Callable

import numpy as np

from toruskam.lattice import DomainSpec, Lattice, log_sup_h_pow
from toruskam.series.exceptions import IncompatibleSeries, NotNearIdentity, ZeroHCoordinate
from toruskam.series.series import Accumulator, TaylorLaurentSeries, check_band
from toruskam.utils.logger import logger

CAUCHY_RTOL = 1e-9
LAURENT_CUTOFF = 1e-15


def _degree_groups(series: TaylorLaurentSeries) -> dict[int, np.ndarray]:
    degrees = series.degrees
    return {int(degree): np.flatnonzero(degrees == degree) for degree in np.unique(degrees)}


def _mul_into(accumulator: Accumulator, f: TaylorLaurentSeries, g: TaylorLaurentSeries, q_limit: int):
    """Add the product f * g truncated at |Q| <= q_limit to the accumulator."""
    if f.is_zero or g.is_zero:
        return
    f_groups, g_groups = _degree_groups(f), _degree_groups(g)
    for a, f_index in f_groups.items():
        for b, g_index in g_groups.items():
            if a + b > q_limit:
                continue
            keys = (f.keys[f_index][:, None, :] + g.keys[g_index][None, :, :]).reshape(-1, f.keys.shape[1])
            coeffs = f.coeffs[f_index][:, None, :] * g.coeffs[g_index][None, :, :]
            accumulator.add(keys, coeffs.reshape(keys.shape[0], -1))


def mul(f: TaylorLaurentSeries, g: TaylorLaurentSeries, q_limit: int | None = None) -> TaylorLaurentSeries:
    """
    Product of truncated series.

    One factor may be scalar (m = 1), in which case it multiplies every component of the other;
    otherwise the product is componentwise. Terms with |Q| > q_limit (default q_max) are never
    formed; out-of-band terms are dropped with their mass recorded on the result.

    Raises:
        IncompatibleSeries: On dimension, truncation or component-count mismatch.
    """
    if (f.n, f.d, f.q_max, f.p_max) != (g.n, g.d, g.q_max, g.p_max):
        raise IncompatibleSeries("Product of series with different dimensions or truncation")
    if f.m != g.m and 1 not in (f.m, g.m):
        raise IncompatibleSeries(f"Cannot multiply series with {f.m} and {g.m} components")
    m = max(f.m, g.m)
    q_limit = f.q_max if q_limit is None else min(q_limit, f.q_max)
    accumulator = Accumulator(f.n, f.d, m, f.q_max, f.p_max)
    accumulator.dropped_mass = f.dropped_mass + g.dropped_mass
    _mul_into(accumulator, f, g, q_limit)
    return accumulator.result()


def _binomial(top: np.ndarray, k: int) -> np.ndarray:
    """Generalized binomial coefficient C(top, k) for integer arrays `top` of either sign."""
    result = np.ones(top.shape, dtype=float)
    for t in range(k):
        result *= (top - t) / (t + 1)
    return result


def _small_parts(g: TaylorLaurentSeries) -> list[TaylorLaurentSeries]:
    """
    The variables of the Taylor expansion of f(g) around the identity.

    For g = Id + g_hat these are u_k = g_hat^h_k / h_k (so that g^h_k = h_k (1 + u_k)) followed by
    the vertical displacements g_hat^v_j.
    """
    n, d = g.n, g.d
    small = g - TaylorLaurentSeries.identity(n, d, g.q_max, g.p_max)
    if small.v_min < 1:
        raise NotNearIdentity(f"Composition argument must be Id + O(|v|), displacement has v_min = {small.v_min}")
    parts = []
    for k in range(n):
        shift = np.zeros(n, dtype=np.int64)
        shift[k] = -1
        parts.append(small.component(k).shift_p(shift))
    for j in range(d):
        parts.append(small.component(n + j))
    return parts


def _exponents(v_mins: list[int], q_max: int, degree_cap: list[int]) -> list[tuple[int, ...]]:
    """All multi-indices alpha with sum alpha_c v_min_c <= q_max, graded by |alpha|."""
    bounds = [
        min(q_max // v_min if v_min <= q_max else 0, cap) for v_min, cap in zip(v_mins, degree_cap)
    ]
    alphas = [
        alpha
        for alpha in itertools.product(*(range(bound + 1) for bound in bounds))
        if sum(a * v for a, v in zip(alpha, v_mins)) <= q_max
    ]
    return sorted(alphas, key=lambda alpha: (sum(alpha), alpha))


def compose(f: TaylorLaurentSeries, g: TaylorLaurentSeries, strict: bool = True) -> TaylorLaurentSeries:
    """
    Jet-exact composition f o g for a map g = Id + g_hat with g_hat = O(|v|).

    With g^h_k = h_k (1 + u_k) and g^v = v + w the composite is expanded as
    sum_alpha u^J w^L B_{J,L}(f), where B_{J,L} multiplies c_{Q,P} by prod C(p_k, j_k) C(q_l, l_l)
    and lowers Q by L. Only finitely many alpha contribute below q_max + 1 because every u_k and
    w_l vanishes at v = 0.

    Args:
        f (TaylorLaurentSeries): Series with any number of components.
        g (TaylorLaurentSeries): Map-valued series with m = n + d components.
        strict (bool): Raise on Laurent band overflow instead of recording the dropped mass.

    Returns:
        TaylorLaurentSeries: f o g, exact for |Q| <= q_max when no overflow occurred.

    Raises:
        NotNearIdentity: If g - Id has terms of vertical order 0.
        PBandOverflow: If strict and coefficients left the band.
    """
    n, d = f.n, f.d
    if g.m != n + d or (g.n, g.d) != (n, d):
        raise IncompatibleSeries(f"Composition needs a map with {n + d} components, got {g.m}")
    if (f.q_max, f.p_max) != (g.q_max, g.p_max):
        raise IncompatibleSeries("Composition of series with different truncation")
    q_max = f.q_max
    parts = _small_parts(g)
    v_mins = [part.v_min for part in parts]
    accumulator = Accumulator(n, d, f.m, q_max, f.p_max)
    accumulator.dropped_mass = f.dropped_mass + sum(part.dropped_mass for part in parts) + g.dropped_mass
    if f.is_zero:
        return check_band(accumulator.result(), strict, "compose")

    f_degree_max = f.v_max
    degree_cap = [q_max] * n + [f_degree_max] * d
    powers: dict[tuple[int, ...], TaylorLaurentSeries | None] = {}
    for alpha in _exponents(v_mins, q_max, degree_cap):
        if not any(alpha):
            accumulator.add(f.keys, f.coeffs)
            powers[alpha] = None
            continue
        lift = next(index for index, a in enumerate(alpha) if a)
        parent = alpha[:lift] + (alpha[lift] - 1,) + alpha[lift + 1:]
        if parent not in powers:
            continue
        base = parts[lift]
        if powers[parent] is None:
            power = base.clear_dropped()
        else:
            power = mul(powers[parent], base)
            accumulator.dropped_mass += power.dropped_mass - base.dropped_mass
            power = power.clear_dropped()
        if power.is_zero:
            continue
        powers[alpha] = power

        weights = np.ones(len(f), dtype=float)
        for k in range(n):
            if alpha[k]:
                weights *= _binomial(f.P[:, k], alpha[k])
        lowered = f.keys.copy()
        for j in range(d):
            if alpha[n + j]:
                weights *= _binomial(f.Q[:, j], alpha[n + j])
                lowered[:, j] -= alpha[n + j]
        budget = q_max - power.v_min
        mask = (weights != 0) & np.all(lowered[:, :d] >= 0, axis=1)
        mask &= lowered[:, :d].sum(axis=1) <= budget
        if not mask.any():
            continue
        weighted = TaylorLaurentSeries._trusted(
            n, d, f.m, q_max, f.p_max, lowered[mask], f.coeffs[mask] * weights[mask, None]
        )
        _mul_into(accumulator, power, weighted, q_max)
    return check_band(accumulator.result(), strict, "compose")


def compose_with_linear(f: TaylorLaurentSeries, deck: Any, j: int) -> TaylorLaurentSeries:
    """f o tau_hat_j: the coefficient at (Q, P) is multiplied by lambda_j^P mu_j^Q."""
    if f.is_zero:
        return f
    return f.with_coeffs(f.coeffs * deck.multipliers(j, f.keys)[:, None])


def apply_linear(deck: Any, j: int, f: TaylorLaurentSeries) -> TaylorLaurentSeries:
    """tau_hat_j . f for a map-valued series: component k scaled by lambda_{j,k}, n + l by mu_{j,l}."""
    return f.with_coeffs(f.coeffs * deck.component_eigenvalues(j)[None, :])


def apply_linear_inverse(deck: Any, j: int, f: TaylorLaurentSeries) -> TaylorLaurentSeries:
    """tau_hat_j^{-1} . f, the inverse of `apply_linear`."""
    return f.with_coeffs(f.coeffs / deck.component_eigenvalues(j)[None, :])


def linear_map(deck: Any, j: int, q_max: int, p_max: int) -> TaylorLaurentSeries:
    """tau_hat_j as a map-valued series."""
    identity = TaylorLaurentSeries.identity(deck.n, deck.d, q_max, p_max)
    return apply_linear(deck, j, identity)


def jet_truncate(f: TaylorLaurentSeries, q: int) -> TaylorLaurentSeries:
    """Drop all terms with |Q| > q."""
    return f.jet_truncate(q)


def eval(f: TaylorLaurentSeries, h: Any, v: Any) -> np.ndarray:
    """
    Evaluate sum c_{Q,P} h^P v^Q at one point or a batch of points.

    Args:
        f (TaylorLaurentSeries): Series to evaluate.
        h (Any): Nonzero complex n-vector, or array (K, n).
        v (Any): Complex d-vector, or array (K, d).

    Returns:
        np.ndarray: m-vector, or array (K, m) for batched input.

    Raises:
        ZeroHCoordinate: If some h coordinate vanishes.
    """
    h = np.asarray(h, dtype=complex)
    v = np.asarray(v, dtype=complex)
    single = h.ndim == 1
    h = np.atleast_2d(h).reshape(-1, f.n)
    v = np.atleast_2d(v).reshape(h.shape[0], f.d)
    if np.any(h == 0):
        raise ZeroHCoordinate("Series with Laurent terms evaluated at h with a zero coordinate")
    monomials = np.ones((h.shape[0], len(f)), dtype=complex)
    for k in range(f.n):
        monomials *= h[:, k: k + 1] ** f.P[None, :, k]
    for j in range(f.d):
        monomials *= v[:, j: j + 1] ** f.Q[None, :, j]
    values = monomials @ f.coeffs
    return values[0] if single else values


def _log_weights(f: TaylorLaurentSeries, lat: Lattice, dom: DomainSpec) -> np.ndarray:
    log_h = log_sup_h_pow(lat, dom.eps, f.P) if len(f) else np.zeros(0)
    return np.atleast_1d(log_h) + f.degrees * math.log(dom.r)


def norm_upper(f: TaylorLaurentSeries, lat: Lattice, dom: DomainSpec) -> float:
    """
    Certified bound sum |c_{Q,P}| sup|h^P| r^{|Q|} on Omega_{eps, r}, maximized over components.

    Example:
        >>> lat = Lattice(n=1, e_prime=[[1j]])
        >>> f = TaylorLaurentSeries.monomial(1, 1, [1], [1])
        >>> norm_upper(f, lat, DomainSpec(eps=0.0, r=0.5))
        0.5
    """
    if f.is_zero:
        return 0.0
    weights = np.exp(_log_weights(f, lat, dom))
    return float((np.abs(f.coeffs) * weights[:, None]).sum(axis=0).max())


def sample_domain(
    lat: Lattice, dom: DomainSpec, n_points: int, rng: np.random.Generator, d: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Random points of Omega_{eps, r}: h = exp(-2 pi R + i theta) with R in P_eps^+, v in the closed polydisc.
    """
    t = rng.uniform(-dom.eps, 1.0 + dom.eps, size=(n_points, lat.n))
    R = t @ lat.im
    theta = rng.uniform(0.0, 2.0 * math.pi, size=(n_points, lat.n))
    h = np.exp(-2.0 * math.pi * R + 1j * theta)
    radius = dom.r * np.sqrt(rng.uniform(0.0, 1.0, size=(n_points, d)))
    phase = rng.uniform(0.0, 2.0 * math.pi, size=(n_points, d))
    return h, radius * np.exp(1j * phase)


def sampled_sup(
    f: TaylorLaurentSeries,
    lat: Lattice,
    dom: DomainSpec,
    n_points: int = 1000,
    rng: np.random.Generator | None = None,
    per_component: bool = False,
) -> float | np.ndarray:
    """Largest sampled |f| on Omega_{eps, r}, a lower bound for the sup-norm."""
    rng = rng if rng is not None else np.random.default_rng(0)
    h, v = sample_domain(lat, dom, n_points, rng, f.d)
    values = np.abs(eval(f, h, v)).max(axis=0) if len(f) else np.zeros(f.m)
    return values if per_component else float(values.max())


def cauchy_bound_check(
    f: TaylorLaurentSeries,
    lat: Lattice,
    dom: DomainSpec,
    M: float | np.ndarray | None = None,
    rtol: float = CAUCHY_RTOL,
    n_points: int = 4000,
) -> tuple[bool, np.ndarray]:
    """
    Check the Cauchy estimates |c_{Q,P}| <= M_c / (r^{|Q|} sup|h^P|) coefficientwise.

    Args:
        f (TaylorLaurentSeries): Coefficients of a function holomorphic on Omega_{eps, r}.
        lat (Lattice): Period data.
        dom (DomainSpec): The domain.
        M (float | np.ndarray | None): Sup bound, scalar or per component; sampled when omitted.
        rtol (float): Relative slack for sampling error.
        n_points (int): Samples for the sup when M is omitted.

    Returns:
        tuple[bool, np.ndarray]: Overall verdict and a boolean (N, m) array of passing coefficients.
    """
    if f.is_zero:
        return True, np.ones((0, f.m), dtype=bool)
    if M is None:
        M = sampled_sup(f, lat, dom, n_points=n_points, per_component=True)
    bound = np.broadcast_to(np.asarray(M, dtype=float), (f.m,))[None, :] / np.exp(_log_weights(f, lat, dom))[:, None]
    flags = np.abs(f.coeffs) <= bound * (1.0 + rtol)
    if not flags.all():
        logger.warning(f"Cauchy estimate violated by {int((~flags).sum())} coefficients")
    return bool(flags.all()), flags


def laurent_from_function(
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n: int,
    d: int,
    m: int,
    q_max: int,
    p_max: int,
    h_radii: Any = 1.0,
    v_radius: float = 0.5,
    samples: int = 64,
) -> TaylorLaurentSeries:
    """
    Taylor-Laurent coefficients of a holomorphic function from samples on a product of circles.

    The trapezoidal rule on |h_k| = h_radii[k], |v_j| = v_radius is evaluated with explicit sums:
    c_{Q,P} = mean f(h, v) h^{-P} v^{-Q}. Aliasing is negligible when `samples` exceeds twice the
    effective bandwidth.

    Args:
        func (Callable): Vectorized function taking h of shape (K, n) and v of shape (K, d) and
            returning values of shape (K, m).
        n (int): Horizontal dimension.
        d (int): Vertical dimension.
        m (int): Number of components.
        q_max (int): Vertical truncation.
        p_max (int): Laurent band.
        h_radii (Any): Scalar or n-vector of circle radii for h.
        v_radius (float): Circle radius for v.
        samples (int): Points per circle.

    Returns:
        TaylorLaurentSeries: The sampled coefficients, negligible ones removed.
    """
    if samples <= 2 * max(p_max, q_max):
        logger.warning(f"{samples} samples per circle alias modes up to |P| = {p_max}, |Q| = {q_max}")
    h_radii = np.broadcast_to(np.asarray(h_radii, dtype=float), (n,))
    angles = 2.0 * math.pi * np.arange(samples) / samples
    grid = np.array(list(itertools.product(range(samples), repeat=n + d)), dtype=np.int64).reshape(-1, n + d)
    theta = angles[grid[:, :n]]
    phi = angles[grid[:, n:]]
    h = h_radii[None, :] * np.exp(1j * theta)
    v = v_radius * np.exp(1j * phi)
    values = np.asarray(func(h, v), dtype=complex).reshape(grid.shape[0], m)

    q_keys = [Q for Q in itertools.product(range(q_max + 1), repeat=d) if sum(Q) <= q_max]
    p_keys = list(itertools.product(range(-p_max, p_max + 1), repeat=n))
    keys = np.array([list(Q) + list(P) for Q in q_keys for P in p_keys], dtype=np.int64).reshape(-1, n + d)
    coeffs = np.zeros((keys.shape[0], m), dtype=complex)
    for row, key in enumerate(keys):
        Q, P = key[:d], key[d:]
        phase = np.exp(-1j * (theta @ P + phi @ Q))
        scale = np.prod(h_radii ** (-P.astype(float))) * v_radius ** (-float(Q.sum()))
        coeffs[row] = scale * (phase @ values) / grid.shape[0]
    largest = float(np.abs(coeffs).max()) if coeffs.size else 0.0
    coeffs[np.abs(coeffs) <= LAURENT_CUTOFF * largest] = 0.0
    return TaylorLaurentSeries(n, d, m, q_max, p_max, keys, coeffs)


def dilate(f: TaylorLaurentSeries, s: float) -> TaylorLaurentSeries:
    """
    Conjugate a map-valued series by the vertical dilation D_s(h, v) = (h, s v).

    D_s^{-1} o (Id + f) o D_s = Id + f~ where horizontal components of f~ carry s^{|Q|} and
    vertical components s^{|Q| - 1}. Exact; dilate(dilate(f, s), 1 / s) == f.
    """
    if s <= 0:
        raise ValueError(f"Dilation factor must be positive, got {s}")
    if f.m != f.n + f.d:
        raise IncompatibleSeries("Dilation acts on map-valued series with n + d components")
    log_s = math.log(s)
    exponents = np.repeat(f.degrees[:, None].astype(float), f.m, axis=1)
    exponents[:, f.n:] -= 1.0
    return f.with_coeffs(f.coeffs * np.exp(exponents * log_s))
