import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbu import (
    GaussQ,
    InvalidInputError,
    LogExact,
    ObservationSet,
    PureState,
    b0_state,
    basic_observation_set,
    dist_to_b0,
    log_likelihood,
    projector_from_vector,
    state_coords,
)
from qbu.hilbert import all_sign_vectors, likelihood_exact


def test_state_must_be_normalised():
    with pytest.raises(InvalidInputError):
        PureState(np.array([1.0, 1.0], dtype=complex))
    with pytest.raises(InvalidInputError):
        PureState.from_vector([0, 0])


def test_basic_set_has_d_squared_projectors():
    for d in (2, 3, 4):
        assert basic_observation_set(d).n == d * d


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_basic_round_on_b0(d):
    obs = basic_observation_set(d)
    target = LogExact.from_fraction(Fraction(1, d)) ** (d * d)
    for s in all_sign_vectors(d):
        psi = b0_state(s)
        assert likelihood_exact(psi, obs) == target
        assert log_likelihood(psi, obs) == pytest.approx(-d * d * math.log(d), rel=1e-12)


def test_sign_vectors_fix_first_sign():
    signs = list(all_sign_vectors(4))
    assert len(signs) == 8
    assert all(s[0] == 1 for s in signs)


def test_zero_likelihood_is_minus_inf():
    obs = ObservationSet.of(2, [projector_from_vector([1, 0])])
    assert log_likelihood(PureState.from_vector([0, 1]), obs) == -math.inf
    assert likelihood_exact(PureState.from_vector([0, 1]), obs).is_zero


def test_dimension_mismatch():
    obs = basic_observation_set(3)
    with pytest.raises(InvalidInputError):
        log_likelihood(PureState.from_vector([1, 0]), obs)


def test_dist_to_b0_ties_pick_smallest_signs():
    signs, dist = dist_to_b0(PureState.from_vector([1, 0]))
    assert signs == (1, -1)
    assert dist == pytest.approx(math.sqrt(2 - math.sqrt(2)))


def test_dist_to_b0_on_b0_is_zero():
    signs, dist = dist_to_b0(b0_state((1, -1, 1)))
    assert signs == (1, -1, 1)
    assert dist < 1e-12


def test_state_coords_of_b0():
    c = state_coords(b0_state((1, -1, 1)))
    assert c.n == (0, 1, 0)
    assert np.allclose(c.alpha, 1.0)
    assert np.allclose(c.theta, 0.0)


def test_observation_set_json_roundtrip():
    obs = basic_observation_set(3, mult=2)
    back = ObservationSet.from_json(obs.to_json())
    assert back.n == obs.n
    psi = b0_state((1, 1, -1))
    assert likelihood_exact(psi, back) == likelihood_exact(psi, obs)


def test_malformed_observation_json():
    with pytest.raises(InvalidInputError):
        ObservationSet.from_json({"d": 2, "items": [{"v_re": [1, 0], "v_im": [0]}]})
    with pytest.raises(InvalidInputError):
        ObservationSet.from_json({"items": []})


def test_split_last_removes_one_copy():
    obs = basic_observation_set(2, mult=3)
    rest, last = obs.split_last()
    assert rest.n == obs.n - 1


def test_gauss_arithmetic():
    assert GaussQ(1, 2) * GaussQ(1, -2) == GaussQ(5, 0)
    assert GaussQ(1, 2).abs2() == 5


@given(
    st.fractions(min_value=Fraction(1, 1000), max_value=1000),
    st.fractions(min_value=Fraction(1, 1000), max_value=1000),
    st.integers(-4, 4),
)
@settings(max_examples=60, deadline=None)
def test_logexact_matches_fractions(a, b, k):
    x, y = LogExact.from_fraction(a), LogExact.from_fraction(b)
    assert (x * y).to_fraction() == a * b
    assert (x / y).to_fraction() == a / b
    assert (x**k).to_fraction() == a**k
    assert (x * y).log() == pytest.approx(math.log(a) + math.log(b), abs=1e-9)
