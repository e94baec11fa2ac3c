"""Monotone NAE-3SAT instances compiled into observation sets.

Every variable is a basis direction.  ``K1`` copies of the basic set pin the
likelihood to the binarized states ``B0``; each clause contributes ``K2``
copies of three projectors orthogonal to the all-equal-sign direction on its
variables, which zero out the ``B0`` points that violate it.

Clause indices are 1-based in the public API and JSON, matching the usual
DIMACS-style convention for variables.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import mpmath
import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .exact import LogExact
from .hilbert import (
    ObservationSet,
    all_sign_vectors,
    b0_overlaps,
    b0_state,
    basic_observation_set,
    likelihood_exact,
    projector_from_vector,
)
from .sphere import haar_states

B0_GUARD = 20
FANO_LINES = ((1, 2, 3), (1, 4, 5), (1, 6, 7), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 5, 6))


@dataclass(frozen=True)
class Mnae3SatInstance:
    d: int
    clauses: tuple = ()

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise InvalidInputError("variable count must be a positive integer")
        clauses = []
        for c in self.clauses:
            try:
                c = tuple(int(x) for x in c)
            except (TypeError, ValueError):
                raise InvalidInputError(f"clause {c!r} is not a triple of integers") from None
            if len(c) != 3 or len(set(c)) != 3:
                raise InvalidInputError(f"clause {c} needs three distinct variables")
            if any(x < 1 or x > self.d for x in c):
                raise InvalidInputError(f"clause {c} has a variable outside 1..{self.d}")
            clauses.append(c)
        object.__setattr__(self, "clauses", tuple(clauses))

    @property
    def k(self) -> int:
        return len(self.clauses)

    def to_json(self) -> dict:
        return {"d": self.d, "clauses": [list(c) for c in self.clauses]}

    @classmethod
    def from_json(cls, data) -> "Mnae3SatInstance":
        try:
            return cls(int(data["d"]), tuple(data["clauses"]))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed SAT instance: {exc}") from None


def fano_instance() -> Mnae3SatInstance:
    """The seven lines of the Fano plane: a 3-uniform hypergraph with no 2-colouring."""
    return Mnae3SatInstance(7, FANO_LINES)


def clause_vectors(clause, d: int) -> list:
    """Unnormalised ``|a>+|b>-2|c>`` and its two cyclic shifts."""
    if d < 3:
        raise InvalidInputError("clause observations need d >= 3")
    a, b, c = (x - 1 for x in clause)
    out = []
    for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
        v = [0] * d
        v[x], v[y], v[z] = 1, 1, -2
        out.append(v)
    return out


def clause_observations(clause, d: int) -> list:
    return [projector_from_vector(v) for v in clause_vectors(clause, d)]


def clause_update(d: int) -> Fraction:
    """Clause-triple likelihood at a good binarized point, ``32/(27 d^3)``."""
    return Fraction(32, 27 * d**3)


def _ceil_real(x: mpmath.mpf) -> int:
    return int(mpmath.ceil(x))


def _mp(C):
    if isinstance(C, Fraction):
        return mpmath.mpf(C.numerator) / C.denominator
    return mpmath.mpf(C)


def _sat_observations(inst: Mnae3SatInstance, K1: int, K2: int) -> ObservationSet:
    obs = basic_observation_set(inst.d, mult=K1)
    for clause in inst.clauses:
        obs = obs + ObservationSet.of(inst.d, clause_observations(clause, inst.d), K2)
    return obs


def _threshold(d: int, K1: int, K2: int, k: int) -> LogExact:
    """``d^(-K1 d^2) (32/(27 d^3))^(K2 k)``, the likelihood of a solution state."""
    return LogExact.from_fraction(Fraction(1, d)) ** (K1 * d * d) * (
        LogExact.from_fraction(clause_update(d)) ** (K2 * k)
    )


@dataclass(frozen=True)
class CompiledMle:
    """Compiled decision instance: is some state at likelihood ``>= p`` or all below ``p/C``?"""

    instance: Mnae3SatInstance
    observations: ObservationSet
    K1: int
    K2: int
    C: float
    p: LogExact
    reps: int = 1
    log_C: float = field(default=None)

    def __post_init__(self):
        if self.log_C is None:
            object.__setattr__(self, "log_C", math.log(self.C))

    @property
    def d(self) -> int:
        return self.instance.d

    @property
    def log_p(self) -> float:
        return self.p.log()

    def to_json(self) -> dict:
        return {
            "kind": "sat-mle",
            "instance": self.instance.to_json(),
            "observations": self.observations.to_json(),
            "K1": self.K1,
            "K2": self.K2,
            "C": self.C,
            "log_C": self.log_C,
            "reps": self.reps,
            "log_p": self.log_p,
            "p_exact": self.p.to_json(),
        }


@dataclass(frozen=True)
class CompiledQbu:
    instance: Mnae3SatInstance
    observations: ObservationSet
    K1: int
    K2: int
    eps_g: Fraction
    p: LogExact
    overridden: bool = False
    reps: int = 1

    @property
    def d(self) -> int:
        return self.instance.d

    @property
    def log_p(self) -> float:
        return self.p.log()

    def to_json(self) -> dict:
        return {
            "kind": "sat-qbu",
            "instance": self.instance.to_json(),
            "observations": self.observations.to_json(),
            "K1": self.K1,
            "K2": self.K2,
            "eps_g": str(self.eps_g),
            "overridden": self.overridden,
            "reps": self.reps,
            "log_p": self.log_p,
            "p_exact": self.p.to_json(),
        }


def mle_constants(d: int, C) -> tuple:
    """``(K1, K2)``: ``ceil(1200 d^5 ln C)`` and ``ceil(2 ln C / (3 ln d))``."""
    with mpmath.workdps(50):
        lnC = mpmath.log(_mp(C))
        K1 = _ceil_real(1200 * mpmath.mpf(d) ** 5 * lnC)
        K2 = _ceil_real(2 * lnC / (3 * mpmath.log(d)))
    return K1, K2


def compile_mle(inst: Mnae3SatInstance, C=2) -> CompiledMle:
    """Build the approximate-MLE instance with gap ``C``.

    The threshold carries one clause factor per clause occurrence, which is
    the exact likelihood of a solution state.
    """
    if inst.d < 3:
        raise InvalidInputError("compilation needs d >= 3")
    try:
        if not C > 1:
            raise InvalidInputError("the gap C must exceed 1")
    except TypeError:
        raise InvalidInputError("the gap C must be a real number") from None
    K1, K2 = mle_constants(inst.d, C)
    obs = _sat_observations(inst, K1, K2)
    return CompiledMle(inst, obs, K1, K2, float(C), _threshold(inst.d, K1, K2, inst.k))


def qbu_constants(d: int) -> tuple:
    """``(K1, K2, eps_g)`` with ``K1 = ceil(1200 d^7 ln d)``, ``K2 = ceil(2 d^2 / 3)``."""
    with mpmath.workdps(50):
        K1 = _ceil_real(1200 * mpmath.mpf(d) ** 7 * mpmath.log(d))
    K2 = -((-2 * d * d) // 3)
    return K1, K2, Fraction(1, 2400 * d**9 * (1 + d))


def compile_qbu(inst: Mnae3SatInstance, K1: int | None = None, K2: int | None = None) -> CompiledQbu:
    """Normalising-constant instance; ``K1``/``K2`` overrides are flagged."""
    if inst.d < 3:
        raise InvalidInputError("compilation needs d >= 3")
    dK1, dK2, eps_g = qbu_constants(inst.d)
    overridden = (K1 is not None and K1 != dK1) or (K2 is not None and K2 != dK2)
    K1 = dK1 if K1 is None else int(K1)
    K2 = dK2 if K2 is None else int(K2)
    if K1 < 1 or K2 < 1:
        raise InvalidInputError("K1 and K2 must be positive")
    obs = _sat_observations(inst, K1, K2)
    return CompiledQbu(inst, obs, K1, K2, eps_g, _threshold(inst.d, K1, K2, inst.k), overridden)


def amplify(compiled, reps: int):
    """Repeat every observation ``reps`` times.

    Likelihoods and the threshold are raised to the power ``reps``; for MLE
    instances the gap ``C`` becomes ``C**reps`` (kept in log form).
    """
    if not isinstance(reps, int) or reps < 1:
        raise InvalidInputError("reps must be a positive integer")
    changes = dict(
        observations=compiled.observations.scaled(reps),
        p=compiled.p ** reps,
        reps=compiled.reps * reps,
    )
    if isinstance(compiled, CompiledMle):
        changes["log_C"] = compiled.log_C * reps
        changes["C"] = compiled.C**reps if compiled.log_C * reps < 700 else math.inf
    return replace(compiled, **changes)


def nae_eval(assignment, inst: Mnae3SatInstance):
    """``(satisfied, violated clauses)``: a clause is violated when its signs are all equal."""
    s = tuple(assignment)
    if len(s) != inst.d:
        raise InvalidInputError("assignment length differs from the variable count")
    bad = [c for c in inst.clauses if s[c[0] - 1] == s[c[1] - 1] == s[c[2] - 1]]
    return not bad, bad


@dataclass(frozen=True)
class B0Row:
    signs: tuple
    likelihood: LogExact
    good: bool

    @property
    def log_likelihood(self) -> float:
        return self.likelihood.log()


def enumerate_b0(compiled) -> list:
    """Exact likelihood of every binarized state, with its good/bad label."""
    d = compiled.d
    if d > B0_GUARD:
        raise ResourceLimitError(f"2^(d-1) enumeration guard exceeded at d={d}")
    rows = []
    for s in all_sign_vectors(d):
        L = likelihood_exact(b0_state(s), compiled.observations)
        rows.append(B0Row(s, L, nae_eval(s, compiled.instance)[0]))
    return rows


# ---------------------------------------------------------------------------
# lemma sweep


def _adversarial(rng, d: int, eps_grid, per: int):
    """States near every binarized point: generic, amplitude-only and phase-only kicks."""
    signs = np.array(list(all_sign_vectors(d)), dtype=float)
    centres = signs / math.sqrt(d)
    out = []
    for eps in eps_grid:
        for c in centres:
            z = haar_states(rng, d, per)
            out.append(c + eps * z)
            amp = rng.standard_normal((per, d))
            amp /= np.linalg.norm(amp, axis=1, keepdims=True)
            out.append(c * (1 + eps * math.sqrt(d) * amp))
            ph = rng.standard_normal((per, d))
            ph /= np.linalg.norm(ph, axis=1, keepdims=True)
            out.append(c * np.exp(1j * eps * ph))
    states = np.concatenate(out).astype(complex)
    return states / np.linalg.norm(states, axis=1, keepdims=True)


def _basic_likelihood(psi, d: int) -> np.ndarray:
    """One basic round, ``prod |psi_k|^2 * prod_{j<k} |psi_j +- i psi_k|^2 / 2`` (vectorised)."""
    a2 = np.abs(psi) ** 2
    L = np.prod(a2, axis=1)
    for j, k in itertools.combinations(range(d), 2):
        L = L * (np.abs(psi[:, j] + 1j * psi[:, k]) ** 2 / 2) * (np.abs(psi[:, j] - 1j * psi[:, k]) ** 2 / 2)
    return L


def _clause_likelihood(psi, clause) -> np.ndarray:
    a, b, c = (x - 1 for x in clause)
    x, y, z = psi[:, a], psi[:, b], psi[:, c]
    return (np.abs(x + y - 2 * z) ** 2 * np.abs(y + z - 2 * x) ** 2 * np.abs(z + x - 2 * y) ** 2) / 216


def _coords(psi, d: int):
    """Vectorised amplitude/phase coordinates, gauge on entry 1."""
    alpha = d * np.abs(psi) ** 2
    ph = np.angle(psi * np.exp(-1j * np.angle(psi[:, :1]))) / np.pi
    theta = (ph + 0.5) % 1.0 - 0.5
    return alpha, theta


@dataclass
class LemmaReport:
    d: int
    samples: int
    checks: dict
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "samples": self.samples,
            "checks": self.checks,
            "violations": self.violations[:50],
            "violation_count": len(self.violations),
        }


def verify_lemma_bounds(d: int, samples: int = 10_000, seed: int = 0, rel_tol: float = 1e-9) -> LemmaReport:
    """Check the amplitude/phase, near-``B0`` and clause bounds on sampled states.

    ``samples`` counts every state checked: roughly half are Haar random and
    the rest sit at log-spaced distances 1e-3..1e-1 from each binarized point.
    Every clause on the ``d`` variables is tested against every binarized
    point, with the distance minimised over the global phase.
    """
    if d < 3 or d > 6:
        raise InvalidInputError("the lemma sweep covers 3 <= d <= 6")
    if samples < 1000:
        raise InvalidInputError("need at least 1000 samples")
    rng = np.random.default_rng(seed)
    eps_grid = np.logspace(-3, -1, 5)
    nb = 2 ** (d - 1)
    per = max(1, (samples // 2) // (len(eps_grid) * nb * 3))
    adv = _adversarial(rng, d, eps_grid, per)
    haar = haar_states(rng, d, samples - len(adv))
    psi = np.concatenate([adv, haar, np.array([b0_state(s).vector for s in all_sign_vectors(d)])])
    N = psi.shape[0]
    rel = _basic_likelihood(psi, d) * float(d) ** (d * d)
    alpha, theta = _coords(psi, d)
    eps_a = np.linalg.norm(alpha - 1, axis=1)
    signs, ov = b0_overlaps(psi, d)
    dist = np.sqrt(np.clip(2 - 2 * ov, 0, None))  # N x nb

    violations = []
    checks = {}

    def record(name, lhs, rhs, mask, kind):
        # kind "le": lhs <= rhs ; "ge": lhs >= rhs
        slack = rel_tol * np.maximum(np.abs(rhs), 1e-300)
        bad = (lhs > rhs + slack) if kind == "le" else (lhs < rhs - slack)
        bad &= mask
        margin = (rhs - lhs) if kind == "le" else (lhs - rhs)
        tested = int(mask.sum())
        checks[name] = {
            "tested": tested,
            "violations": int(bad.sum()),
            "min_margin": float(margin[mask].min()) if tested else None,
        }
        for idx in np.flatnonzero(bad)[:10]:
            violations.append(
                {"check": name, "state": [[z.real, z.imag] for z in psi[idx % N].tolist()], "lhs": float(lhs[idx]), "rhs": float(rhs[idx])}
            )

    ones = np.ones(N, dtype=bool)
    record("amplitude", rel, 1 - eps_a**2 / (4 * d), ones, "le")
    close = eps_a <= 0.5
    record("phase", rel, 1 - 3 * np.max(theta**2, axis=1), close, "le")

    lower = (1 - 2 * dist * d**2.5) / float(d) ** (d * d)
    L1 = np.repeat(_basic_likelihood(psi, d)[:, None], nb, axis=1)
    record("near_b0", L1.ravel(), lower.ravel(), (dist <= 0.1).ravel(), "ge")

    q = float(clause_update(d))
    for clause in itertools.combinations(range(1, d + 1), 3):
        Lc = np.repeat(_clause_likelihood(psi, clause)[:, None], nb, axis=1)
        cols = [c - 1 for c in clause]
        good = ~np.all(signs[:, cols] == signs[:, cols[:1]], axis=1)
        gmask = np.broadcast_to(good[None, :], dist.shape)
        near = dist <= 0.1
        record(
            f"clause_good{clause}",
            Lc.ravel(),
            (q * (1 - 12 * dist * math.sqrt(d))).ravel(),
            (gmask & near).ravel(),
            "ge",
        )
        record(
            f"clause_bad{clause}",
            Lc.ravel(),
            (64 / 27 * dist**3).ravel(),
            (~gmask & near).ravel(),
            "le",
        )
        record(f"clause_max{clause}", Lc[:, 0], np.ones(N), ones, "le")
    return LemmaReport(d, N, checks, violations)


def distance_chain_sweep(d: int, samples: int = 20_000, seed: int = 0) -> dict:
    """Largest distance to ``B0`` inside the amplitude/phase box used by the MLE argument.

    The box is ``|alpha - 1| < 0.1/d^2`` and ``|theta_k| < 0.1/d`` with
    ``psi_k = sqrt(alpha_k/d) e^{i pi theta_k}``; the claimed bound on the
    distance is ``0.1/d^{3/2}``.  Phases are pushed to the corners of the box,
    where the distance is largest.
    """
    rng = np.random.default_rng(seed)
    theta = rng.choice([-1.0, 1.0], (samples, d)) * (0.1 / d) * rng.uniform(0.9, 1.0, (samples, d))
    theta[:, 0] = 0.0
    u = rng.standard_normal((samples, d))
    u -= u.mean(axis=1, keepdims=True)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    alpha = 1 + u * (0.1 / d**2) * rng.uniform(0, 1, (samples, 1))
    psi = np.sqrt(alpha / d) * np.exp(1j * np.pi * theta)
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    _, ov = b0_overlaps(psi, d)
    dist = np.sqrt(np.clip(2 - 2 * ov.max(axis=1), 0, None))
    claim = 0.1 / d**1.5
    worst = float(dist.max())
    return {"d": d, "samples": samples, "max_distance": worst, "claimed_bound": claim, "ratio": worst / claim, "ok": worst <= claim}


def good_ball_floor(compiled: CompiledQbu, samples: int = 200, seed: int = 0) -> dict:
    """Log-likelihood within ``eps_g`` of each good point against ``log p + ln(1 - ln d/sqrt d)``."""
    d = compiled.d
    rng = np.random.default_rng(seed)
    floor = compiled.log_p + math.log(1 - math.log(d) / math.sqrt(d))
    eps = float(compiled.eps_g)
    worst = math.inf
    tested = 0
    for s in all_sign_vectors(d):
        if not nae_eval(s, compiled.instance)[0]:
            continue
        c = np.array(s, dtype=float) / math.sqrt(d)
        z = haar_states(rng, d, samples)
        r = eps * rng.uniform(0, 1, (samples, 1))
        psi = c + r * z
        psi /= np.linalg.norm(psi, axis=1, keepdims=True)
        ll = compiled.K1 * np.log(_basic_likelihood(psi, d))
        for clause in compiled.instance.clauses:
            ll = ll + compiled.K2 * np.log(_clause_likelihood(psi, clause))
        worst = min(worst, float(ll.min() - floor))
        tested += samples
    return {"tested": tested, "floor": floor, "min_margin": worst, "ok": tested > 0 and worst >= 0}
