import math
from fractions import Fraction

import numpy as np
import pytest

from qbu import ObservationSet, PureState, basic_observation_set, log_likelihood, pnorm_exact, projector_from_vector
from qbu.estimators import (
    maximize_likelihood,
    observable_expectation,
    pnorm_from_rho_avg,
    posterior_density,
    rho_avg,
    spectral_projectors,
)


def test_single_projector_mean_state():
    # rho = (I + P) / (d + 1)
    obs = ObservationSet.of(3, [projector_from_vector([1, 0, 0])])
    re, im = rho_avg(obs).exact
    assert re[0][0] == Fraction(1, 2) and re[1][1] == Fraction(1, 4) and re[2][2] == Fraction(1, 4)
    assert all(x == 0 for row in im for x in row)


def test_prior_mean_is_maximally_mixed():
    rho = rho_avg(ObservationSet(4))
    assert np.allclose(rho.matrix, np.eye(4) / 4)


def test_rho_is_a_density_matrix(rng):
    vs = [rng.standard_normal(3) + 1j * rng.standard_normal(3) for _ in range(3)]
    rho = rho_avg(ObservationSet.of(3, [projector_from_vector(v) for v in vs]))
    assert rho.trace == pytest.approx(1)
    assert np.allclose(rho.matrix, rho.matrix.conj().T)
    assert rho.min_eigenvalue() > -1e-12


def test_chain_rule_exact():
    obs = basic_observation_set(2)
    assert pnorm_from_rho_avg(obs) == pnorm_exact(obs).exact_normalized


def test_observable_expectation_matches_rho(rng):
    obs = basic_observation_set(2)
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    A = A + A.conj().T
    rho = rho_avg(obs).matrix
    assert observable_expectation(obs, A) == pytest.approx(np.trace(A @ rho).real, rel=1e-9)


def test_spectral_order_descending():
    lam, _ = spectral_projectors(np.diag([1.0, 3.0, 2.0]))
    assert list(lam) == [3.0, 2.0, 1.0]


def test_posterior_density():
    obs = ObservationSet.of(2, [projector_from_vector([1, 0])])
    psi = PureState.from_vector([1, 0])
    assert posterior_density(obs, psi) == pytest.approx(2.0)


def test_mle_finds_projector_direction():
    obs = ObservationSet.of(3, [projector_from_vector([1, 1j, 0])], mult=4)
    psi, ll = maximize_likelihood(obs, restarts=4, seed=0)
    assert ll == pytest.approx(0.0, abs=1e-8)
    assert ll == pytest.approx(log_likelihood(psi, obs))


def test_mle_is_deterministic():
    obs = basic_observation_set(3)
    a = maximize_likelihood(obs, restarts=4, seed=3)[1]
    b = maximize_likelihood(obs, restarts=4, seed=3)[1]
    assert a == b
    assert a >= -9 * math.log(3) - 1e-9
