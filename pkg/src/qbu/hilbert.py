"""Pure states, observations and likelihoods on C^d.

Likelihoods are kept in natural-log space.  Observation sets store
multiplicities rather than repeated operators, so a set with a million copies
of the same projector costs one entry.

States and observations built from Gaussian-integer vectors (basis states,
``(|j> +- i|k>)/sqrt2``, clause states, binarized states) also carry an exact
direction, and :func:`likelihood_exact` evaluates them in rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError
from .exact import GaussQ, LogExact, gauss_norm2, squared_overlap, to_gauss_vector

NORM_TOL = 1e-12
PSD_TOL = 1e-10


def _as_complex_vector(values) -> np.ndarray:
    try:
        v = np.array([complex(x) for x in values], dtype=complex)
    except TypeError as exc:
        raise InvalidInputError(f"not a complex vector: {exc}") from None
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError("vector must be one-dimensional and nonempty")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("vector entries must be finite")
    return v


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector in C^d, optionally with an exact (unnormalised) direction."""

    vector: np.ndarray
    exact: tuple | None = None

    def __post_init__(self):
        norm = np.linalg.norm(self.vector)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidInputError(f"state norm {norm!r} is not 1")
        self.vector.setflags(write=False)

    @classmethod
    def from_vector(cls, values) -> "PureState":
        """Normalise ``values`` into a state; keeps an exact form when possible."""
        exact = to_gauss_vector(values)
        v = _as_complex_vector(values)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise InvalidInputError("zero vector is not a state")
        return cls(v / norm, exact)

    @property
    def d(self) -> int:
        return self.vector.size

    def __repr__(self):
        return f"PureState({np.array2string(self.vector, precision=4)})"


@dataclass(frozen=True, eq=False)
class Observation:
    """A Hermitian PSD operator; rank-one observations also keep their vector."""

    matrix: np.ndarray
    vector: np.ndarray | None = None
    exact_vector: tuple | None = None
    exact_matrix: tuple | None = None

    def __post_init__(self):
        self.matrix.setflags(write=False)
        if self.vector is not None:
            self.vector.setflags(write=False)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_rank_one(self) -> bool:
        return self.vector is not None

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def is_exact(self) -> bool:
        return self.exact_vector is not None or self.exact_matrix is not None

    def expectation(self, psi: np.ndarray) -> float:
        """``<psi|O|psi>`` for a (not necessarily normalised) vector."""
        if self.vector is not None:
            return float(abs(np.vdot(self.vector, psi)) ** 2)
        return float(np.vdot(psi, self.matrix @ psi).real)

    def exact_expectation(self, psi_exact) -> Fraction:
        """Rational ``<psi|O|psi>/<psi|psi>``; requires exact forms on both sides."""
        if psi_exact is None or not self.is_exact:
            raise InvalidInputError("exact evaluation needs exact state and observation")
        if self.exact_vector is not None:
            return squared_overlap(self.exact_vector, psi_exact)
        acc = GaussQ()
        for j, row in enumerate(self.exact_matrix):
            for k, o in enumerate(row):
                acc = acc + psi_exact[j].conjugate() * o * psi_exact[k]
        return acc.re / gauss_norm2(psi_exact)

    def exact_entries(self):
        """Exact matrix entries as ``GaussQ``, or ``None`` in float mode."""
        if self.exact_matrix is not None:
            return self.exact_matrix
        if self.exact_vector is None:
            return None
        v = self.exact_vector
        n2 = gauss_norm2(v)
        return tuple(
            tuple(GaussQ((a * b.conjugate()).re / n2, (a * b.conjugate()).im / n2) for b in v)
            for a in v
        )


def projector_from_vector(v) -> Observation:
    """Rank-one projector onto ``v / |v|``.

    >>> projector_from_vector([1, 0]).matrix.real
    array([[1., 0.],
           [0., 0.]])
    """
    exact = to_gauss_vector(v)
    vec = _as_complex_vector(v)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise InvalidInputError("cannot project onto the zero vector")
    unit = vec / norm
    return Observation(np.outer(unit, unit.conj()), unit, exact)


def general_observation(matrix, exact=None) -> Observation:
    """Wrap a Hermitian PSD matrix; ``exact`` may give rational entries."""
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidInputError("observation matrix must be square")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("observation matrix must be finite")
    if np.max(np.abs(m - m.conj().T)) > PSD_TOL:
        raise InvalidInputError("observation matrix is not Hermitian")
    if np.linalg.eigvalsh(m).min() < -PSD_TOL:
        raise InvalidInputError("observation matrix is not positive semidefinite")
    exact_matrix = None
    if exact is not None:
        rows = [to_gauss_vector(r) for r in exact]
        if any(r is None for r in rows):
            raise InvalidInputError("exact entries must be rational")
        exact_matrix = tuple(rows)
    return Observation(m, None, None, exact_matrix)


@dataclass(frozen=True)
class ObservationSet:
    """Observations with positive integer multiplicities, all of dimension ``d``."""

    d: int
    items: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.d < 1:
            raise InvalidInputError("dimension must be positive")
        items = tuple((obs, int(m)) for obs, m in self.items)
        for obs, m in items:
            if obs.d != self.d:
                raise InvalidInputError(f"observation of dimension {obs.d} in a d={self.d} set")
            if m < 1:
                raise InvalidInputError("multiplicities must be positive")
        object.__setattr__(self, "items", items)

    @classmethod
    def of(cls, d, observations, mult=1) -> "ObservationSet":
        return cls(d, tuple((o, mult) for o in observations))

    @property
    def n(self) -> int:
        """Total number of observations, counting multiplicity."""
        return sum(m for _, m in self.items)

    @property
    def is_exact(self) -> bool:
        return all(o.is_exact for o, _ in self.items)

    @property
    def rank_one(self) -> bool:
        return all(o.is_rank_one for o, _ in self.items)

    def __len__(self):
        return len(self.items)

    def __add__(self, other: "ObservationSet") -> "ObservationSet":
        if other.d != self.d:
            raise InvalidInputError("cannot join observation sets of different dimension")
        return ObservationSet(self.d, self.items + other.items)

    def with_observation(self, obs: Observation, mult: int = 1) -> "ObservationSet":
        return ObservationSet(self.d, self.items + ((obs, mult),))

    def scaled(self, reps: int) -> "ObservationSet":
        return ObservationSet(self.d, tuple((o, m * reps) for o, m in self.items))

    def split_last(self):
        """Return ``(rest, last)`` with one copy of the last observation removed."""
        if not self.items:
            raise InvalidInputError("observation set is empty")
        *head, (last, m) = self.items
        if m > 1:
            head.append((last, m - 1))
        return ObservationSet(self.d, tuple(head)), last

    def expanded(self) -> list:
        return [o for o, m in self.items for _ in range(m)]

    def to_json(self) -> dict:
        items = []
        for obs, m in self.items:
            if obs.is_rank_one:
                v = obs.vector
                if obs.exact_vector is not None:
                    # keep the exact direction; loaders renormalise
                    v = np.array([complex(z) for z in obs.exact_vector])
                items.append({"v_re": v.real.tolist(), "v_im": v.imag.tolist(), "mult": m})
            else:
                items.append(
                    {"m_re": obs.matrix.real.tolist(), "m_im": obs.matrix.imag.tolist(), "mult": m}
                )
        return {"d": self.d, "items": items}

    @classmethod
    def from_json(cls, data) -> "ObservationSet":
        try:
            d = int(data["d"])
            items = []
            for it in data["items"]:
                mult = int(it.get("mult", 1))
                if "v_re" in it:
                    re = it["v_re"]
                    im = it.get("v_im", [0] * len(re))
                    if len(re) != len(im):
                        raise InvalidInputError("v_re and v_im differ in length")
                    vals = [_json_scalar(a, b) for a, b in zip(re, im)]
                    items.append((projector_from_vector(vals), mult))
                else:
                    re = np.array(it["m_re"], dtype=float)
                    im = np.array(it.get("m_im", np.zeros_like(re)), dtype=float)
                    items.append((general_observation(re + 1j * im), mult))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed observation set: {exc}") from None
        return cls(d, tuple(items))


def _json_scalar(re, im):
    if float(re).is_integer() and float(im).is_integer():
        return complex(int(re), int(im)) if im else int(re)
    return complex(re, im)


def _check_dims(psi: PureState, obs: ObservationSet):
    if psi.d != obs.d:
        raise InvalidInputError(f"state dimension {psi.d} != observation dimension {obs.d}")


def log_likelihood(psi: PureState, obs: ObservationSet) -> float:
    """Sum of ``mult * ln <psi|O|psi>``; ``-inf`` if any factor vanishes."""
    _check_dims(psi, obs)
    total = 0.0
    for o, m in obs.items:
        q = o.expectation(psi.vector)
        if q <= 0.0:
            return -math.inf
        total += m * math.log(q)
    return total


def likelihood_exact(psi: PureState, obs: ObservationSet) -> LogExact:
    """Exact likelihood as a :class:`LogExact`.

    Raises
    ------
    InvalidInputError
        If the state or any observation lacks an exact form.
    """
    _check_dims(psi, obs)
    if psi.exact is None:
        raise InvalidInputError("state has no exact form")
    acc = LogExact.one()
    for o, m in obs.items:
        acc = acc * (LogExact.from_fraction(o.exact_expectation(psi.exact)) ** m)
    return acc


def basis_vector(d: int, k: int) -> list:
    v = [0] * d
    v[k] = 1
    return v


def basic_observation_set(d: int, mult: int = 1) -> ObservationSet:
    """The d^2 projectors ``|k>`` and ``(|j> +- i|k>)/sqrt2`` for ``j < k``."""
    if d < 2:
        raise InvalidInputError("a basic observation set needs d >= 2")
    obs = [projector_from_vector(basis_vector(d, k)) for k in range(d)]
    for j, k in itertools.combinations(range(d), 2):
        for sign in (1, -1):
            v = [0] * d
            v[j] = 1
            v[k] = sign * 1j
            obs.append(projector_from_vector(v))
    return ObservationSet.of(d, obs, mult)


def _check_signs(signs) -> tuple:
    s = tuple(int(x) for x in signs)
    if not s or any(x not in (1, -1) for x in s):
        raise InvalidInputError("sign vector entries must be +1 or -1")
    if s[0] != 1:
        raise InvalidInputError("first sign is fixed to +1")
    return s


def all_sign_vectors(d: int):
    """All 2^(d-1) gauge-fixed sign vectors, ``+`` before ``-`` lexicographically."""
    for tail in itertools.product((1, -1), repeat=d - 1):
        yield (1,) + tail


def b0_state(signs) -> PureState:
    """Binarized state ``sum_k s_k |k> / sqrt(d)``."""
    return PureState.from_vector(list(_check_signs(signs)))


@dataclass(frozen=True)
class StateCoords:
    """Amplitude/phase coordinates of a pure state.

    ``psi_k = sqrt(alpha_k / d) * exp(i*pi*(theta_k + n_k))`` up to a global
    phase.  ``gauge`` is the index whose phase is fixed to zero (normally 0).
    """

    alpha: tuple
    theta: tuple
    n: tuple
    gauge: int = 0

    @property
    def d(self) -> int:
        return len(self.alpha)

    def to_state(self) -> PureState:
        d = self.d
        amp = np.sqrt(np.maximum(np.array(self.alpha, dtype=float), 0.0) / d)
        phase = np.exp(1j * np.pi * (np.array(self.theta) + np.array(self.n)))
        v = amp * phase
        return PureState(v / np.linalg.norm(v))


def state_coords(psi: PureState, zero_tol: float = 1e-14) -> StateCoords:
    """Coordinates of ``psi`` with the phase of the first nonzero entry removed."""
    v = psi.vector
    d = v.size
    nonzero = np.flatnonzero(np.abs(v) > zero_tol)
    gauge = int(nonzero[0])
    v = v * np.exp(-1j * np.angle(v[gauge]))
    alpha = d * np.abs(v) ** 2
    theta, bits = [], []
    for k in range(d):
        if abs(v[k]) <= zero_tol or k == gauge:
            theta.append(0.0)
            bits.append(0)
            continue
        t = float(np.angle(v[k]) / np.pi)  # in (-1, 1]
        if -0.5 <= t < 0.5:
            theta.append(t)
            bits.append(0)
        else:
            t = t - 1.0 if t >= 0.5 else t + 1.0
            theta.append(t)
            bits.append(1)
    return StateCoords(tuple(alpha.tolist()), tuple(theta), tuple(bits), gauge)


def b0_overlaps(psi_vectors: np.ndarray, d: int):
    """``|<b_s|psi>|`` for every sign vector; rows follow :func:`all_sign_vectors`."""
    signs = np.array(list(all_sign_vectors(d)), dtype=float)
    return signs, np.abs(psi_vectors @ signs.T / math.sqrt(d))


def dist_to_b0(psi: PureState):
    """Nearest binarized state and the phase-minimised Euclidean distance.

    For unit vectors ``min_phi |e^{i phi} psi - b| = sqrt(2 - 2|<b|psi>|)``,
    so the nearest point maximises the overlap.  Ties within 1e-12 go to the
    lexicographically smallest sign vector
    (numeric order, so ``-1`` sorts before ``+1``).
    """
    d = psi.d
    signs, ov = b0_overlaps(psi.vector[None, :], d)
    ov = ov[0]
    tied = np.flatnonzero(ov >= ov.max() - 1e-12)
    best = min(tied, key=lambda i: tuple(signs[i]))
    dist = math.sqrt(max(0.0, 2.0 - 2.0 * float(ov[best])))
    return tuple(int(x) for x in signs[best]), dist
