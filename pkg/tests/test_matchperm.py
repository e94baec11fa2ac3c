import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbu import InvalidInputError, ObservationSet, ResourceLimitError, pnorm_exact, projector_from_vector
from qbu.matchperm import (
    double_factorial,
    doubled_identity,
    dump_matrix,
    extract_base_permanent,
    interpolation_nodes,
    leading_coefficient,
    load_matrix,
    pairing_sum,
    pairing_sum_bruteforce,
    pairings,
    permanent,
    permanent_bruteforce,
    permanent_sparse,
    pnorm_via_pairings,
    validate_doubled,
    wick_constant,
)


@pytest.mark.parametrize("n", range(1, 9))
def test_all_ones_pairings(n):
    assert pairing_sum([[1] * (2 * n)] * (2 * n)) == double_factorial(2 * n - 1)


def test_pairings_enumerate():
    assert len(list(pairings(6))) == 15
    assert double_factorial(-1) == 1 and double_factorial(7) == 105


def test_odd_size_is_rejected():
    with pytest.raises(InvalidInputError):
        pairing_sum([[1] * 3] * 3)


def test_permanent_small_values():
    assert permanent([[1] * 4] * 4) == 24
    assert permanent([[1, 2], [3, 4]]) == 10
    assert permanent(np.eye(3)) == pytest.approx(1.0)
    assert permanent([]) == 1


def test_permanent_fraction_exact():
    M = [[Fraction(1, 2), Fraction(1, 3)], [Fraction(1, 5), Fraction(1, 7)]]
    assert permanent(M) == Fraction(1, 14) + Fraction(1, 15)


def test_guards():
    with pytest.raises(ResourceLimitError):
        permanent([[1] * 23] * 23)
    with pytest.raises(ResourceLimitError):
        pairing_sum([[1] * 22] * 22)


int_matrices = st.integers(1, 6).flatmap(
    lambda m: st.lists(st.lists(st.integers(-4, 4), min_size=m, max_size=m), min_size=m, max_size=m)
)


@given(int_matrices)
@settings(max_examples=80, deadline=None)
def test_ryser_matches_bruteforce(M):
    assert permanent(M) == permanent_bruteforce(M)
    assert permanent_sparse(M) == permanent_bruteforce(M)


@given(st.integers(1, 4).flatmap(lambda k: st.lists(st.integers(-3, 3), min_size=k * (2 * k + 1), max_size=k * (2 * k + 1))))
@settings(max_examples=60, deadline=None)
def test_pairing_sum_matches_bruteforce(vals):
    m = int((math.isqrt(1 + 8 * len(vals)) - 1) // 2)
    S = [[0] * m for _ in range(m)]
    it = iter(vals)
    for i in range(m):
        for j in range(i, m):
            S[i][j] = S[j][i] = next(it)
    assert pairing_sum(S) == pairing_sum_bruteforce(S)


def test_wick_constant_d1():
    w = wick_constant(1, 1)
    assert w.value == pytest.approx(math.pi, abs=1e-12)
    assert w.ratio_printed == pytest.approx(4.0)
    assert wick_constant(2, 2).ratio_printed == pytest.approx(16.0)


def test_pairing_formula_single_real_vector():
    # one real projector: the pairing formula sees half of the raw integral
    obs = ObservationSet.of(2, [projector_from_vector([1, 0])])
    assert pnorm_via_pairings(obs) / pnorm_exact(obs).raw == pytest.approx(0.5)


def test_doubled_validation():
    validate_doubled(doubled_identity(2), unit_diagonal=True)
    with pytest.raises(InvalidInputError):
        validate_doubled(np.eye(3))


def test_leading_coefficient_exact():
    nodes = [Fraction(k) for k in range(4)]
    values = [3 * x**3 - x + 2 for x in nodes]
    assert leading_coefficient(nodes, values) == 3


def test_chebyshev_nodes_in_window():
    nodes = interpolation_nodes(5, 0.5, "chebyshev")
    assert len(nodes) == 5 and all(0 < x <= 0.5 for x in nodes)


def test_extraction_exact_mode(rng):
    X = rng.standard_normal((3, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    X = np.repeat(X, 2, axis=0)
    A = X @ X.T
    B = [[Fraction(x) for x in row] for row in (A - doubled_identity(3)).tolist()]
    for kind, ref in (("permanent", permanent(B)), ("pairing", pairing_sum(B))):
        assert extract_base_permanent(A, kind, exact=True).value == ref


def test_matrix_json_roundtrip():
    M = [[Fraction(1, 3), 2], [2, Fraction(-5, 7)]]
    back = load_matrix(dump_matrix(M))
    assert back[0][0] == Fraction(1, 3) and back[1][1] == Fraction(-5, 7)
