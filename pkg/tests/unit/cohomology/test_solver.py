import numpy as np
import pytest

from tests.utils import near_identity, random_series
from toruskam.cohomology import (
    IncompatibleRHS,
    ResonantDivisor,
    apply_L,
    coefficient_bound_violations,
    commutation_defect,
    compatibility_check,
    max_commutation_defect,
    solve,
)
from toruskam.diophantine import diophantine_fit
from toruskam.kam import conjugate, invert_map
from toruskam.series import DeckSystem, LinearDeck, TaylorLaurentSeries, norm_upper


def planted(deck: LinearDeck, P0) -> LinearDeck:
    mu = deck.mu.copy()
    mu[:, 0] = np.exp(-(deck.log_lam @ np.asarray(P0, dtype=float)))
    return LinearDeck(lam=deck.lam, mu=mu)


def test_apply_L_multiplies_by_divisor(deck_1d):
    phi = TaylorLaurentSeries.monomial(1, 1, [2], [1], [1.0, 2.0], q_max=6, p_max=4)
    image = apply_L(deck_1d, 0, phi)
    lam, mu = deck_1d.lam[0, 0], deck_1d.mu[0, 0]
    assert np.allclose(image.coefficient([2], [1]), [lam * mu**2 - lam, 2.0 * (lam * mu**2 - mu)])


@pytest.mark.parametrize("dimension", [1, 2])
def test_solve_inverts_L(dimension, deck_1d, deck_2d, rng):
    deck = deck_1d if dimension == 1 else deck_2d
    n = d = dimension
    for _ in range(100):
        G0 = random_series(rng, n, d, n + d, q_max=6, p_max=4, terms=6, q_low=2)
        F = [apply_L(deck, m, G0) for m in range(n)]
        G, report = solve(F, deck, (2, 6))
        assert G.allclose(G0, atol=1e-10 * G0.max_abs())
        assert report.residual <= 1e-9 * max(f.max_abs() for f in F)


def test_solve_zero_rhs(deck_2d):
    F = [TaylorLaurentSeries.zeros(2, 2, 4, 6, 4)] * 2
    G, report = solve(F, deck_2d, (2, 6))
    assert G.is_zero
    assert report.skipped_resonant == 0


def test_solve_rejects_wrong_number_of_rhs(deck_2d):
    with pytest.raises(ValueError):
        solve([TaylorLaurentSeries.zeros(2, 2, 4, 6, 4)], deck_2d, (2, 6))


def test_solution_obeys_diophantine_estimate(deck_1d, lattice_1d, domain, rng):
    fit = diophantine_fit(deck_1d, 8, 2.0)
    G0 = random_series(rng, 1, 1, 2, q_max=6, p_max=4, terms=10, q_low=2)
    F = [apply_L(deck_1d, 0, G0)]
    G, report = solve(F, deck_1d, (2, 6), fit=fit, lat=lattice_1d, dom=domain, delta=0.01)
    assert report.bound_violations == 0
    assert coefficient_bound_violations(G, F, fit) == 0
    assert coefficient_bound_violations(G.scale(1e12), F, fit) > 0
    assert report.norm_G > 0
    assert report.norm_G_composed > 0
    assert report.max_divisor_used > 0


def test_resonant_divisor_raises(deck_1d):
    deck = planted(deck_1d, [1])
    F = [TaylorLaurentSeries.monomial(1, 1, [2], [1], [0.0, 1e-3], q_max=6, p_max=4)]
    with pytest.raises(ResonantDivisor) as exc_info:
        solve(F, deck, (2, 6))
    assert exc_info.value.P == [1]
    assert exc_info.value.Q == [2]
    assert exc_info.value.target == "v0"
    assert exc_info.value.to_dict()["value"] < 1e-13


def test_negligible_resonant_coefficient_is_skipped(deck_1d):
    deck = planted(deck_1d, [1])
    F = [
        TaylorLaurentSeries.monomial(1, 1, [2], [1], [0.0, 1e-14], q_max=6, p_max=4)
        + TaylorLaurentSeries.monomial(1, 1, [2], [0], [1.0, 1.0], q_max=6, p_max=4)
    ]
    G, report = solve(F, deck, (2, 6))
    assert report.skipped_resonant == 1
    assert np.all(G.coefficient([2], [1]) == 0)
    assert np.all(G.coefficient([2], [0]) != 0)


def test_incompatible_rhs(deck_2d, rng):
    G0 = random_series(rng, 2, 2, 4, q_max=6, p_max=4, terms=6, q_low=2)
    G1 = random_series(rng, 2, 2, 4, q_max=6, p_max=4, terms=6, q_low=2)
    compatible = [apply_L(deck_2d, 0, G0), apply_L(deck_2d, 1, G0)]
    assert compatibility_check(deck_2d, compatible, (2, 6))
    incompatible = [apply_L(deck_2d, 0, G0), apply_L(deck_2d, 1, G1)]
    assert not compatibility_check(deck_2d, incompatible, (2, 6))
    with pytest.raises(IncompatibleRHS):
        solve(incompatible, deck_2d, (2, 6))


def test_commutation_defect_of_linear_system(lattice_2d, deck_2d):
    sys = DeckSystem.linear_system(lattice_2d, deck_2d, 6, 10)
    assert commutation_defect(sys, 0, 1, 6) == 0.0
    with pytest.raises(ValueError):
        commutation_defect(sys, 1, 1, 6)


def test_commutation_defect_of_conjugated_system(lattice_2d, deck_2d, rng):
    base = DeckSystem.linear_system(lattice_2d, deck_2d, 6, 10)
    g = near_identity(rng, 2, 2, q_max=6, p_max=10, size=0.05) - TaylorLaurentSeries.identity(2, 2, 6, 10)
    sys = base.with_pert(conjugate(base, g, invert_map(g, 1, strict=False), strict=False))
    defect, pair = max_commutation_defect(sys, 6, strict=False)
    scale = max(norm_upper(f, sys.lat, sys.domain) for f in sys.pert)
    assert pair == (0, 1)
    assert defect < 1e-10 * scale

    broken = sys.with_pert([sys.pert[0], sys.pert[1].scale(2.0)])
    assert commutation_defect(broken, 0, 1, 6, strict=False) > 1e-6
