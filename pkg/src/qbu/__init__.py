"""Quantum Bayesian updating: exact normalising constants, estimators and hardness compilers."""

from .errors import (
    ConditioningError,
    InvalidInputError,
    NotFoundError,
    QBUError,
    ResourceLimitError,
)
from .exact import GaussQ, LogExact
from .hilbert import (
    Observation,
    ObservationSet,
    PureState,
    StateCoords,
    b0_state,
    basic_observation_set,
    dist_to_b0,
    general_observation,
    log_likelihood,
    projector_from_vector,
    state_coords,
)
from .sphere import (
    RealPolynomial,
    SphereIntegral,
    likelihood_polynomial,
    monomial_sphere_integral,
    pnorm_exact,
    pnorm_montecarlo,
)

__version__ = "0.1.0"

__all__ = [
    "ConditioningError",
    "GaussQ",
    "InvalidInputError",
    "LogExact",
    "NotFoundError",
    "Observation",
    "ObservationSet",
    "PureState",
    "QBUError",
    "RealPolynomial",
    "ResourceLimitError",
    "SphereIntegral",
    "StateCoords",
    "b0_state",
    "basic_observation_set",
    "dist_to_b0",
    "general_observation",
    "likelihood_polynomial",
    "log_likelihood",
    "monomial_sphere_integral",
    "pnorm_exact",
    "pnorm_montecarlo",
    "projector_from_vector",
    "state_coords",
]
