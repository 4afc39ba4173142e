import numpy as np
import pytest

from tests.utils import near_identity, random_series
from toruskam.kam import invert_map
from toruskam.lattice import DomainSpec, Lattice
from toruskam.series import (
    NotNearIdentity,
    TaylorLaurentSeries,
    ZeroHCoordinate,
    apply_linear,
    apply_linear_inverse,
    cauchy_bound_check,
    compose,
    compose_with_linear,
    dilate,
    eval,
    laurent_from_function,
    linear_map,
    mul,
    norm_upper,
    sampled_sup,
)


def test_compose_binomial_square():
    v = TaylorLaurentSeries.monomial(1, 1, [1], [0], 1.0, 6, 2)
    f = v * v
    g = TaylorLaurentSeries.identity(1, 1, 6, 2) + TaylorLaurentSeries.monomial(1, 1, [2], [0], [0.0, 1.0], 6, 2)
    result = compose(f, g)
    assert result.coefficient([2], [0])[0] == pytest.approx(1.0)
    assert result.coefficient([3], [0])[0] == pytest.approx(2.0)
    assert result.coefficient([4], [0])[0] == pytest.approx(1.0)
    assert len(result) == 3


def test_compose_laurent_substitution():
    # h^-1 v^2 under h -> h (1 + v)
    f = TaylorLaurentSeries.monomial(1, 1, [2], [-1], 1.0, 8, 2)
    g = TaylorLaurentSeries.identity(1, 1, 8, 2) + TaylorLaurentSeries.monomial(1, 1, [1], [1], [1.0, 0.0], 8, 2)
    result = compose(f, g)
    for order in range(2, 9):
        expected = (-1) ** (order - 2)
        assert result.coefficient([order], [-1])[0] == pytest.approx(expected)


def test_compose_with_identity_is_noop(make_series):
    f = make_series(2, 1, 3)
    identity = TaylorLaurentSeries.identity(2, 1, f.q_max, f.p_max)
    assert compose(f, identity).allclose(f, atol=1e-14)


def test_compose_with_empty_displacement():
    f = TaylorLaurentSeries.monomial(1, 1, [2], [0], [0.3, -0.2], 8, 4)
    identity = TaylorLaurentSeries.identity(1, 1, 8, 4)
    zero = TaylorLaurentSeries.zeros(1, 1, 2, 8, 4)
    assert compose(f, identity - zero).allclose(f, atol=1e-15)
    assert compose(zero, identity).is_zero
    psi = invert_map(f, 1)
    assert compose(identity + f, identity - psi).allclose(identity, atol=1e-13)


def test_compose_matches_pointwise(rng, lattice_1d):
    f = random_series(rng, 1, 2, 3, q_max=6, p_max=10, terms=8, q_low=1, p_radius=1)
    g = near_identity(rng, 1, 2)
    h = np.array([1.1 * np.exp(0.3j)])
    v = np.array([1e-2 + 2e-3j, -4e-3j])
    inner = eval(g, h, v)
    expected = eval(f, inner[:1], inner[1:])
    assert np.allclose(eval(compose(f, g), h, v), expected, atol=1e-10)


def test_compose_is_associative(rng):
    f = random_series(rng, 1, 1, 2, q_max=6, p_max=10, terms=6, q_low=2, p_radius=1)
    g1 = near_identity(rng, 1, 1)
    g2 = near_identity(rng, 1, 1)
    lhs = compose(compose(f, g1), g2)
    rhs = compose(f, compose(g1, g2))
    assert lhs.allclose(rhs, atol=1e-12)


def test_compose_requires_near_identity():
    f = TaylorLaurentSeries.monomial(1, 1, [2], [0], 1.0, 4, 2)
    g = TaylorLaurentSeries.identity(1, 1, 4, 2) + TaylorLaurentSeries.constant(1, 1, [0.0, 0.1], 4, 2)
    with pytest.raises(NotNearIdentity):
        compose(f, g)


def test_linear_actions(deck_2d, make_series):
    f = make_series(2, 2, 4)
    assert apply_linear_inverse(deck_2d, 1, apply_linear(deck_2d, 1, f)).allclose(f, atol=1e-12)
    tau = linear_map(deck_2d, 0, f.q_max, f.p_max)
    assert tau.coefficient([1, 0], [0, 0])[2] == deck_2d.mu[0, 0]
    assert tau.coefficient([0, 0], [0, 1])[1] == deck_2d.lam[0, 1]


def test_compose_with_linear_pointwise(deck_1d, make_series):
    f = make_series(1, 1, 2)
    h, v = np.array([0.8 + 0.2j]), np.array([0.3 - 0.1j])
    moved = eval(compose_with_linear(f, deck_1d, 0), h, v)
    expected = eval(f, deck_1d.lam[0] * h, deck_1d.mu[0] * v)
    assert np.allclose(moved, expected, atol=1e-12)


def test_mul_componentwise_and_truncation():
    f = TaylorLaurentSeries(1, 1, 2, 4, 2, [[2, 0]], [[1.0, 2.0]])
    g = TaylorLaurentSeries(1, 1, 2, 4, 2, [[1, 1], [3, 0]], [[3.0, 1.0], [1.0, 1.0]])
    product = mul(f, g)
    assert product.coefficient([3], [1]).tolist() == [3.0, 2.0]
    assert product.coefficient([5], [0]).tolist() == [0.0, 0.0]
    assert mul(f, g, q_limit=2).is_zero


def test_eval_batch_and_zero_h(make_series):
    f = make_series(2, 1, 3)
    h = np.array([[1.0, 0.5j], [0.7, -1.2]])
    v = np.array([[0.1], [0.2j]])
    batch = eval(f, h, v)
    assert batch.shape == (2, 3)
    assert np.allclose(batch[1], eval(f, h[1], v[1]))
    with pytest.raises(ZeroHCoordinate):
        eval(f, np.array([0.0, 1.0]), np.array([0.1]))


def test_norm_upper_example():
    lat = Lattice(n=1, e_prime=[[1j]])
    f = TaylorLaurentSeries.monomial(1, 1, [1], [1], 1.0, 4, 2)
    assert norm_upper(f, lat, DomainSpec(eps=0.0, r=0.5)) == pytest.approx(0.5)
    assert norm_upper(TaylorLaurentSeries.zeros(1, 1, 1, 4, 2), lat, DomainSpec(eps=0.0, r=0.5)) == 0.0


def test_norm_upper_dominates_sampled_sup(rng, lattice_2d):
    dom = DomainSpec(eps=0.05, r=0.4)
    for _ in range(500):
        f = random_series(rng, 2, 1, 2, q_max=4, p_max=3, terms=5, p_radius=2)
        assert sampled_sup(f, lattice_2d, dom, n_points=1000, rng=rng) <= norm_upper(f, lattice_2d, dom) * (1 + 1e-12)


def test_cauchy_estimates_hold_for_sampled_coefficients(lattice_1d):
    dom = DomainSpec(eps=0.0, r=0.5)
    f = TaylorLaurentSeries(1, 1, 1, 4, 2, [[0, 1], [2, -1], [1, 0]], [[0.5], [0.2], [1.0]])
    ok, flags = cauchy_bound_check(f, lattice_1d, dom, M=norm_upper(f, lattice_1d, dom))
    assert ok
    assert flags.shape == (3, 1)


def test_laurent_from_function_recovers_coefficients():
    def func(h, v):
        return (2.0 * h[:, 0] * v[:, 0] ** 2 + 0.5 / h[:, 0] - 1j * v[:, 0])[:, None]

    f = laurent_from_function(func, 1, 1, 1, 4, 3, h_radii=1.0, v_radius=0.5, samples=16)
    assert f.coefficient([2], [1])[0] == pytest.approx(2.0, abs=1e-12)
    assert f.coefficient([0], [-1])[0] == pytest.approx(0.5, abs=1e-12)
    assert f.coefficient([1], [0])[0] == pytest.approx(-1j, abs=1e-12)


def test_dilate_round_trip_and_scaling(make_series):
    f = make_series(1, 1, 2, q_low=2)
    assert dilate(dilate(f, 0.25), 4.0).allclose(f, atol=1e-12)
    scaled = dilate(f, 0.5)
    key = f.keys[0]
    degree = int(key[:1].sum())
    assert scaled.coeffs[0, 0] == pytest.approx(f.coeffs[0, 0] * 0.5 ** degree)
    assert scaled.coeffs[0, 1] == pytest.approx(f.coeffs[0, 1] * 0.5 ** (degree - 1))
    with pytest.raises(ValueError):
        dilate(f, 0.0)
