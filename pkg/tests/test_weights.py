import math
from fractions import Fraction

import pytest

from orbergman.errors import Infeasible, MismatchedOrder
from orbergman.weights import (
    UNBOUNDED,
    WeightSystem,
    admissible_order,
    character_moment_is_zero,
    check_admissible,
    convolve,
    residue_moment,
    root_order_at_one,
    solve_weights,
)

W234 = WeightSystem.from_coeffs(2, {2: 1, 3: 2, 4: 1})
W12 = WeightSystem.from_coeffs(2, {1: 1, 2: 1})


def test_residue_moment_examples():
    assert residue_moment(W234, 0, 0) == 2
    assert residue_moment(WeightSystem.from_coeffs(1, {0: 1}), 5, 0) == 0
    assert residue_moment(W12, 1, 1) == 1


def test_residue_moment_validation():
    with pytest.raises(ValueError):
        residue_moment(W234, -1, 0)
    with pytest.raises(ValueError):
        residue_moment(W234, 0, 2)


def test_check_admissible_examples():
    assert check_admissible(WeightSystem.from_coeffs(1, {0: 1}), 10)
    assert check_admissible(W234, 1)
    assert not check_admissible(W234, 2)
    assert not check_admissible(W12, 1)
    assert check_admissible(W12, 0)
    w = WeightSystem.from_coeffs(2, {1: 1, 2: 4, 3: 5, 4: 2})
    assert check_admissible(w, 1)
    assert not check_admissible(w, 2)


def test_admissible_order_field():
    assert W234.order_K == 1
    assert W12.order_K == 0
    assert WeightSystem.from_coeffs(1, {0: 1}).order_K is UNBOUNDED
    # fails already at the mass identity
    assert WeightSystem.from_coeffs(2, {0: 1}).order_K == -1


def test_solve_weights_examples():
    w = solve_weights(2, 1, (2, 4))
    assert w.coeffs() == {2: Fraction(1), 3: Fraction(2), 4: Fraction(1)}
    assert solve_weights(1, 3, (0, 0)).coeffs() == {0: Fraction(1)}
    w3 = solve_weights(3, 0, (1, 3))
    assert w3.coeffs() == {1: Fraction(1), 2: Fraction(1), 3: Fraction(1)}


def test_solve_weights_normalization_and_order():
    w = solve_weights(3, 1, (1, 9))
    assert min(c for _, c in w.support) == 1
    assert check_admissible(w, 1)
    assert all(c > 0 for _, c in w.support)


def test_solve_weights_infeasible_window():
    with pytest.raises(Infeasible):
        solve_weights(2, 1, (2, 3))
    with pytest.raises(Infeasible):
        solve_weights(5, 2, (0, 6))


def test_solve_weights_lex_preference():
    # the full window is feasible, but so is a support starting earlier
    w = solve_weights(2, 0, (1, 4))
    assert w.indices() == (1, 2)


def test_convolve_examples():
    w = convolve(W12, W12)
    assert w.coeffs() == {2: Fraction(1), 3: Fraction(2), 4: Fraction(1)}
    delta = WeightSystem.from_coeffs(2, {0: 1})
    assert convolve(W234, delta).coeffs() == W234.coeffs()
    with pytest.raises(MismatchedOrder):
        convolve(W234, WeightSystem.from_coeffs(3, {0: 1}))


def test_root_order_examples():
    assert root_order_at_one(W234, 0, 1) == 2
    assert root_order_at_one(W234, 1, 1) == 1
    with pytest.raises(ValueError):
        root_order_at_one(WeightSystem.from_coeffs(1, {0: 1}), 0, 1)
    with pytest.raises(ValueError):
        root_order_at_one(W234, 0, 1, lambda_exp=2)  # gcd(2, 2) != 1


def test_root_order_degenerate_zero_polynomial():
    w = WeightSystem.from_coeffs(2, {0: 1})
    assert root_order_at_one(w, 1, 1) == math.inf
    assert root_order_at_one(w, 0, 1) == 0


def test_character_moment_matches_admissibility():
    for s in range(2):
        for u in range(1, 2):
            assert character_moment_is_zero(W234, s, u)
    assert not character_moment_is_zero(W234, 2, 1)


def test_serialization_roundtrip_bit_exact():
    w = WeightSystem.from_coeffs(4, {1: Fraction(7, 3), 2: Fraction(22, 7), 5: 1})
    again = WeightSystem.from_json(w.to_json())
    assert again == w
    assert again.to_json() == w.to_json()
    rec = w.to_record()
    assert rec["pairs"][0] == [1, 7, 3]


def test_record_rejects_wrong_order():
    rec = W234.to_record()
    rec["K"] = 3
    with pytest.raises(ValueError):
        WeightSystem.from_record(rec)


def test_invariants_rejected():
    with pytest.raises(ValueError):
        WeightSystem.from_coeffs(2, {})
    with pytest.raises(ValueError):
        WeightSystem.from_coeffs(2, {1: 0})
    with pytest.raises(ValueError):
        WeightSystem.from_coeffs(2, {-1: 1})
    with pytest.raises(ValueError):
        WeightSystem.from_coeffs(0, {1: 1})


def test_admissible_order_standalone():
    assert admissible_order({2: Fraction(1), 3: Fraction(2), 4: Fraction(1)}, 2) == 1
    # same coefficients judged against a different modulus
    assert admissible_order({0: Fraction(1)}, 3) == -1
    assert admissible_order({0: Fraction(1)}, 1) is UNBOUNDED
