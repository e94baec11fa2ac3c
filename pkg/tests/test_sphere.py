import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbu import (
    ObservationSet,
    ResourceLimitError,
    basic_observation_set,
    monomial_sphere_integral,
    pnorm_exact,
    pnorm_montecarlo,
    projector_from_vector,
)
from qbu.sphere import haar_states, sphere_area


def test_circle_and_sphere_values():
    assert monomial_sphere_integral((2, 0)).value == pytest.approx(math.pi)
    area = sphere_area(3)
    assert (area.coef, area.pi_power) == (4, 1)
    assert sphere_area(4).value == pytest.approx(2 * math.pi**2)


def test_odd_monomials_vanish():
    assert monomial_sphere_integral((1, 2, 0)).value == 0
    assert monomial_sphere_integral((3, 1)).value == 0


@pytest.mark.parametrize("d,n", [(1, 2), (2, 1), (2, 3), (3, 1), (3, 2), (3, 3), (4, 2)])
def test_repeated_projector_matches_haar_moment(d, n):
    # E|<v|psi>|^(2n) = n! (d-1)! / (d+n-1)! under the Haar measure
    v = [1] + [0] * (d - 1)
    obs = ObservationSet.of(d, [projector_from_vector(v)], mult=n)
    want = Fraction(math.factorial(n) * math.factorial(d - 1), math.factorial(d + n - 1))
    assert pnorm_exact(obs).exact_normalized == want


def test_orthogonal_pair():
    obs = ObservationSet.of(3, [projector_from_vector([1, 0, 0]), projector_from_vector([0, 1, 0])])
    assert pnorm_exact(obs).exact_normalized == Fraction(1, 12)


def test_basic_set_d2():
    p = pnorm_exact(basic_observation_set(2))
    assert p.exact_normalized == Fraction(1, 40)
    assert p.raw == pytest.approx(p.normalized * 2 * math.pi**2)


def test_empty_set_is_one():
    assert pnorm_exact(ObservationSet(3)).normalized == 1


def test_degree_guard():
    with pytest.raises(ResourceLimitError):
        pnorm_exact(basic_observation_set(3, mult=10))


def test_haar_states_are_unit():
    psi = haar_states(np.random.default_rng(0), 4, 1000)
    assert np.allclose(np.linalg.norm(psi, axis=1), 1)


def test_montecarlo_reproducible_and_close():
    obs = basic_observation_set(2)
    a = pnorm_montecarlo(obs, 20000, 7)
    assert a == pnorm_montecarlo(obs, 20000, 7)
    assert abs(a[0] - 1 / 40) < 5 * a[1]


def _random_unitary(rng, d):
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / abs(np.diag(R)))


@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_unitary_invariance(seed, d, n):
    rng = np.random.default_rng(seed)
    vs = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for _ in range(n)]
    U = _random_unitary(rng, d)
    a = pnorm_exact(ObservationSet.of(d, [projector_from_vector(v) for v in vs])).normalized
    b = pnorm_exact(ObservationSet.of(d, [projector_from_vector(U @ v) for v in vs])).normalized
    assert b == pytest.approx(a, rel=1e-9)
