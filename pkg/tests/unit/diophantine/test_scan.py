import math

import numpy as np
import pytest

from toruskam.diophantine import (
    DiophantineFit,
    NotUnimodular,
    ResonantInput,
    change_generators,
    diophantine_fit,
    divisor_scan,
    divisor_table,
    enhanced_bound_holds,
    enhanced_constant,
    nonresonance_scan,
    p_vectors,
    q_vectors,
    scan_keys,
    small_divisor,
    splitting_divisor_check,
)
from toruskam.series import LinearDeck


def planted(deck: LinearDeck, P0) -> LinearDeck:
    """Force lambda_l^P0 mu_{l,1}^2 = mu_{l,1} for every generator."""
    mu = deck.mu.copy()
    mu[:, 0] = np.exp(-(deck.log_lam @ np.asarray(P0, dtype=float)))
    return LinearDeck(lam=deck.lam, mu=mu)


def random_unimodular(rng, n):
    A = np.eye(n, dtype=np.int64)
    for _ in range(4):
        i, j = rng.choice(n, size=2, replace=False)
        E = np.eye(n, dtype=np.int64)
        E[i, j] = rng.choice([-1, 1, 2])
        A = A @ E
    if rng.integers(2):
        A[0] = -A[0]
    return A


def is_witness(record, P, Q, kind="v", target=0):
    return record.P == list(P) and record.Q == list(Q) and record.kind == kind and record.target == target


def test_small_divisor_example():
    deck = LinearDeck(lam=[[np.exp(-2 * np.pi)]], mu=[[0.5]])
    record = small_divisor(deck, [1], [2], "h", 0)
    assert record.value == pytest.approx(0.75 * np.exp(-2 * np.pi), rel=1e-12)
    assert record.order == 3
    with pytest.raises(ValueError):
        small_divisor(deck, [1], [2], "v", 3)


def test_divisor_table_overflow_is_infinite():
    deck = LinearDeck(lam=[[1e-3]], mu=[[0.5]])
    values, _ = divisor_table(deck, np.array([[2, -400]]))
    assert np.all(np.isinf(values) | (values > 1e100))


def test_key_enumeration():
    assert p_vectors(2, 1).tolist() == [[-1, 0], [0, -1], [0, 0], [0, 1], [1, 0]]
    assert q_vectors(2, 2, 2).tolist() == [[0, 2], [1, 1], [2, 0]]
    keys = scan_keys(1, 1, 3)
    assert keys.tolist() == [[2, -1], [2, 0], [2, 1], [3, 0]]
    assert scan_keys(1, 1, 1).shape == (0, 2)


def test_chunked_scan_matches_direct_table(deck_2d, mocker):
    mocker.patch("toruskam.diophantine.scan.SCAN_CHUNK_SIZE", 7)
    table = divisor_scan(deck_2d, 5, max_workers=3)
    values, argmax = divisor_table(deck_2d, scan_keys(2, 2, 5))
    assert np.array_equal(table.values, values)
    assert np.array_equal(table.argmax, argmax)


def test_generic_deck_is_nonresonant(deck_2d):
    ok, witnesses = nonresonance_scan(deck_2d, 8)
    assert ok
    assert witnesses == []


def test_planted_resonance_found(deck_1d):
    deck = planted(deck_1d, [1])
    ok, witnesses = nonresonance_scan(deck, 8)
    assert not ok
    assert any(is_witness(w, [1], [2]) for w in witnesses)
    with pytest.raises(ResonantInput) as exc_info:
        diophantine_fit(deck, 8, 2.0)
    assert any(is_witness(w, [1], [2]) for w in exc_info.value.witnesses)
    assert exc_info.value.to_dict()["witnesses"]


def test_fit_is_min_weighted_divisor(deck_1d):
    fit = diophantine_fit(deck_1d, 6, 1.5)
    table = divisor_scan(deck_1d, 6)
    weighted = table.values * table.orders[:, None].astype(float) ** 1.5
    assert fit.D_fit == pytest.approx(weighted.min())
    assert fit.worst.value * fit.worst.order ** 1.5 == pytest.approx(fit.D_fit)
    assert fit.records == table.values.size


def test_empty_scan_gives_infinite_constant(deck_1d, mocker):
    mocker.patch("toruskam.diophantine.scan.scan_keys", return_value=np.zeros((0, 2), dtype=np.int64))
    fit = diophantine_fit(deck_1d, 4, 2.0)
    assert math.isinf(fit.D_fit)
    assert fit.worst is None


def test_change_generators_identity_and_shear(deck_2d):
    same = change_generators(deck_2d, np.eye(2, dtype=int))
    assert np.allclose(same.lam, deck_2d.lam)
    sheared = change_generators(deck_2d, [[1, 1], [0, 1]])
    assert np.allclose(sheared.lam[0], deck_2d.lam[0] * deck_2d.lam[1])
    assert np.allclose(sheared.mu[1], deck_2d.mu[1])


def test_change_generators_rejects_non_unimodular(deck_2d):
    with pytest.raises(NotUnimodular):
        change_generators(deck_2d, [[2, 0], [0, 1]])
    with pytest.raises(NotUnimodular):
        change_generators(deck_2d, [[1, 0.5], [0, 1]])
    with pytest.raises(NotUnimodular):
        change_generators(deck_2d, np.eye(3))


def test_planted_resonance_transfers_under_generator_change(deck_2d, rng):
    deck = planted(deck_2d, [1, 0])
    generic_ok, _ = nonresonance_scan(deck_2d, 5)
    for _ in range(20):
        A = random_unimodular(rng, 2)
        moved = change_generators(deck, A)
        # moduli grow like exp(|A| |log lambda|), so the zero holds relative to the target size
        scale = max(1.0, float(np.abs(moved.mu[:, 0]).max()))
        assert small_divisor(moved, [1, 0], [2, 0], "v", 0).value <= 1e-10 * scale
        moved_ok, _ = nonresonance_scan(change_generators(deck_2d, A), 5)
        assert moved_ok == generic_ok


def test_planted_resonance_on_unit_scale_deck_stays_exact():
    e_prime = np.array([[0.23 + 0.03j, 0.17 + 0.01j], [0.07 + 0.02j, 0.41 + 0.04j]])
    mu = np.array([[0.71 + 0.2j, 0.37 - 0.5j], [0.52 - 0.33j, 0.8 + 0.15j]])
    deck = planted(LinearDeck(lam=np.exp(2j * np.pi * e_prime), mu=mu), [1, 0])
    for A in ([[1, 0], [0, 1]], [[2, 1], [1, 1]], [[1, -1], [0, 1]], [[0, 1], [-1, 0]]):
        moved = change_generators(deck, A)
        assert np.abs(moved.mu).max() < 10
        assert small_divisor(moved, [1, 0], [2, 0], "v", 0).value <= 1e-10


def test_splitting_divisor_check(deck_1d):
    assert splitting_divisor_check(deck_1d, 8)
    tangential = LinearDeck(lam=deck_1d.lam, mu=deck_1d.lam.copy())
    assert not splitting_divisor_check(tangential, 8)


def test_enhanced_bound(deck_2d):
    fit = diophantine_fit(deck_2d, 6, 2.0)
    assert 0 < enhanced_constant(deck_2d, fit) <= 0.5
    assert enhanced_bound_holds(deck_2d, fit)
    with pytest.raises(ValueError):
        enhanced_bound_holds(deck_2d, DiophantineFit(tau_exp=2.0, D_fit=math.inf, N_scan=6))


def test_near_resonant_divisor_matches_high_precision(deck_1d):
    mpmath = pytest.importorskip("mpmath")
    deck = planted(deck_1d, [1])
    deck = LinearDeck(lam=deck.lam, mu=deck.mu * (1 + 1e-9))
    lam, mu = complex(deck.lam[0, 0]), complex(deck.mu[0, 0])
    with mpmath.workdps(50):
        exact = float(abs(mpmath.mpc(lam) * mpmath.mpc(mu) ** 2 - mpmath.mpc(mu)))
    assert small_divisor(deck, [1], [2], "v", 0).value == pytest.approx(exact, rel=1e-5)
