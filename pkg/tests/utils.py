import numpy as np

from toruskam.series import TaylorLaurentSeries


def random_series(rng, n, d, m, q_max=6, p_max=4, terms=12, q_low=0, p_radius=2):
    """Random sparse series with unit-size coefficients."""
    keys, coeffs = [], []
    for _ in range(terms):
        order = int(rng.integers(q_low, q_max + 1))
        Q = np.bincount(rng.integers(0, d, size=order), minlength=d).tolist() if order else [0] * d
        P = rng.integers(-p_radius, p_radius + 1, size=n).tolist()
        keys.append(Q + P)
        coeffs.append(rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return TaylorLaurentSeries(n, d, m, q_max, p_max, keys, coeffs)


def near_identity(rng, n, d, q_max=6, p_max=10, size=0.1, terms=6):
    """Id + g with g of vertical order >= 2 and max coefficient `size`."""
    g = random_series(rng, n, d, n + d, q_max=q_max, p_max=p_max, terms=terms, q_low=2, p_radius=1)
    return TaylorLaurentSeries.identity(n, d, q_max, p_max) + g.scale(size / g.max_abs())
