import pytest

from tests.utils import near_identity
from toruskam.cohomology import max_commutation_defect
from toruskam.kam import (
    CommutationDefectTooLarge,
    choose_dilation,
    conjugate,
    invert_map,
    newton_step,
    remainder_terms,
    residual_norm,
    verify_conjugacy,
)
from toruskam.lattice import DomainSpec
from toruskam.series import DeckSystem, TaylorLaurentSeries, compose


def displacement(rng, n, q_max=8, p_max=10, size=0.05):
    return near_identity(rng, n, n, q_max=q_max, p_max=p_max, size=size) - TaylorLaurentSeries.identity(
        n, n, q_max, p_max
    )


def conjugated_system(lat, deck, rng, q_max=8, p_max=10, size=0.05):
    base = DeckSystem.linear_system(lat, deck, q_max, p_max)
    g = displacement(rng, lat.n, q_max, p_max, size)
    return base.with_pert(conjugate(base, g, invert_map(g, 1, strict=False), strict=False)), g


def test_invert_map(rng):
    phi = displacement(rng, 1)
    psi = invert_map(phi, 1)
    identity = TaylorLaurentSeries.identity(1, 1, 8, 10)
    assert compose(identity + phi, identity - psi).allclose(identity, atol=1e-13)


def test_invert_map_arguments(rng):
    phi = displacement(rng, 1)
    with pytest.raises(ValueError):
        invert_map(phi, 0)
    with pytest.raises(ValueError):
        invert_map(phi, phi.v_min)
    zero = TaylorLaurentSeries.zeros(1, 1, 2, 8, 10)
    assert invert_map(zero, 3).is_zero


def test_newton_step_doubles_vanishing_order(lattice_1d, deck_1d, rng):
    sys, _ = conjugated_system(lattice_1d, deck_1d, rng)
    dom = DomainSpec(eps=0.1, r=0.5)
    q = sys.v_min - 1
    assert q >= 1
    sys, phi, psi, report = newton_step(sys, 0, dom, 0.01)
    assert report.q_k == q
    assert sys.v_min >= 2 * q + 1
    assert report.v_min_after == sys.v_min
    assert report.low_order_residue <= 1e-10
    assert phi.v_min >= 2
    q = sys.v_min - 1
    sys, _, _, report = newton_step(sys, 1, dom, 0.01)
    assert sys.v_min >= 2 * q + 1


def test_remainder_terms_sum_to_new_perturbation(lattice_1d, deck_1d, rng):
    sys, _ = conjugated_system(lattice_1d, deck_1d, rng)
    dom = DomainSpec(eps=0.1, r=0.5)
    _, phi, psi, report = newton_step(sys, 0, dom, 0.01, with_remainders=True)
    q = report.q_k
    terms = remainder_terms(sys, phi, psi, 0, q)
    total = sum(terms.values(), TaylorLaurentSeries.zeros(1, 1, 2, 8, 10))
    assert total.allclose(conjugate(sys, phi, psi)[0], atol=1e-13)
    assert all(term.jet_truncate(2 * q).max_abs() < 1e-12 for term in terms.values())
    assert set(report.remainders) == set(terms)


def test_commutation_defect_too_large(lattice_2d, deck_2d, rng):
    sys, _ = conjugated_system(lattice_2d, deck_2d, rng, q_max=6)
    broken = sys.with_pert([sys.pert[0], sys.pert[1].scale(2.0)])
    with pytest.raises(CommutationDefectTooLarge) as exc_info:
        newton_step(broken, 0, DomainSpec(eps=0.1, r=0.5), 0.01, strict=False)
    assert exc_info.value.to_dict()["pair"] == (0, 1)
    assert exc_info.value.defect > exc_info.value.tolerance


def test_conjugated_system_commutes(lattice_2d, deck_2d, rng):
    sys, _ = conjugated_system(lattice_2d, deck_2d, rng, q_max=6)
    defect, _ = max_commutation_defect(sys, 6, strict=False)
    assert defect < 1e-10 * residual_norm(sys, sys.domain)


def test_verify_conjugacy_of_known_linearizer(lattice_1d, deck_1d, rng):
    sys, g = conjugated_system(lattice_1d, deck_1d, rng)
    identity = TaylorLaurentSeries.identity(1, 1, 8, 10)
    assert verify_conjugacy(identity, DeckSystem.linear_system(lattice_1d, deck_1d, 8, 10), sys.domain) <= 1e-14
    Phi = identity + g
    assert verify_conjugacy(Phi, sys, DomainSpec(eps=0.05, r=0.3)) < 1e-10


def test_choose_dilation(lattice_1d, deck_1d, rng):
    sys, _ = conjugated_system(lattice_1d, deck_1d, rng, size=1.0)
    dom = DomainSpec(eps=0.1, r=0.5)
    initial = residual_norm(sys, dom)
    s, clamped = choose_dilation(sys, dom, initial / 100)
    assert not clamped
    assert s < 1
    assert residual_norm(sys, dom, 1.0) == initial
    s, clamped = choose_dilation(sys, dom, 0.0)
    assert clamped
    assert s == pytest.approx(10.0 ** (-250.0 / 8))
