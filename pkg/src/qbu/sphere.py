"""Exact integration of polynomials over real unit spheres.

A unit vector ``x`` in C^d is a point of the real sphere S^(2d-1) with
coordinates ``(Re x_1..Re x_d, Im x_1..Im x_d)``.  Each ``<x|O|x>`` is a
quadratic form in those coordinates, so the likelihood of ``n`` observations
is a homogeneous polynomial of degree ``2n``.  Expanding it into monomials and
integrating each with the Gamma-function formula gives ``p_norm`` exactly.

Monomials are packed into Python integers (7 bits per variable), so monomial
multiplication is integer addition.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .hilbert import ObservationSet

log = logging.getLogger(__name__)

DEFAULT_MAX_DEGREE = 24
_BITS = 7
_MASK = (1 << _BITS) - 1
_MAX_EXPONENT = _MASK


def pack(exponents) -> int:
    key = 0
    for i, e in enumerate(exponents):
        if e < 0 or e > _MAX_EXPONENT:
            raise ResourceLimitError(f"exponent {e} outside packable range")
        key |= int(e) << (_BITS * i)
    return key


def unpack(key: int, nvars: int) -> tuple:
    return tuple((key >> (_BITS * i)) & _MASK for i in range(nvars))


@dataclass(frozen=True)
class SphereIntegral:
    """``coef * pi**pi_power``; ``coef`` is an exact rational."""

    coef: Fraction
    pi_power: int

    @property
    def value(self) -> float:
        return float(self.coef) * math.pi**self.pi_power

    def __float__(self):
        return self.value

    def __mul__(self, other):
        if isinstance(other, SphereIntegral):
            return SphereIntegral(self.coef * other.coef, self.pi_power + other.pi_power)
        return SphereIntegral(self.coef * Fraction(other), self.pi_power)

    __rmul__ = __mul__


def _gamma_half_odd(k: int) -> Fraction:
    """``Gamma(k + 1/2) / sqrt(pi)`` for integer ``k >= 0``."""
    return Fraction(math.factorial(2 * k), 4**k * math.factorial(k))


@lru_cache(maxsize=None)
def _even_integral(halves: tuple, m: int) -> Fraction:
    # halves[i] = alpha_i / 2; result is the rational factor of pi**(m // 2)
    num = Fraction(2)
    for k in halves:
        num *= _gamma_half_odd(k)
    total = sum(halves)
    if m % 2 == 0:
        den = Fraction(math.factorial(total + m // 2 - 1))
    else:
        den = _gamma_half_odd(total + (m - 1) // 2)
    return num / den


def monomial_sphere_integral(idx, m: int | None = None) -> SphereIntegral:
    """Integral of ``prod x_i**idx[i]`` over the unit sphere S^(m-1) in R^m.

    Zero when any exponent is odd, otherwise
    ``2 prod Gamma((a_i+1)/2) / Gamma(sum (a_i+1)/2)``.  The result is a
    rational multiple of ``pi**(m // 2)``.

    >>> monomial_sphere_integral((0, 0)).value == 2 * math.pi
    True
    """
    idx = tuple(int(a) for a in idx)
    if m is None:
        m = len(idx)
    if m != len(idx) or m < 1:
        raise InvalidInputError("multi-index length must equal the ambient dimension")
    if any(a < 0 for a in idx):
        raise InvalidInputError("exponents must be nonnegative")
    if any(a % 2 for a in idx):
        return SphereIntegral(Fraction(0), m // 2)
    halves = tuple(sorted(a // 2 for a in idx))
    return SphereIntegral(_even_integral(halves, m), m // 2)


def sphere_area(m: int) -> SphereIntegral:
    """Surface area of S^(m-1)."""
    return monomial_sphere_integral((0,) * m)


class RealPolynomial:
    """Sparse real polynomial ``scale * sum coef * x**alpha``.

    Coefficients are ints (exact mode, with a rational ``scale``) or floats.
    """

    __slots__ = ("nvars", "coeffs", "scale")

    def __init__(self, nvars: int, coeffs: dict, scale=Fraction(1)):
        self.nvars = nvars
        self.coeffs = coeffs
        self.scale = scale

    @classmethod
    def from_terms(cls, nvars, terms: dict, scale=Fraction(1)) -> "RealPolynomial":
        coeffs = {}
        for idx, c in terms.items():
            if len(idx) != nvars:
                raise InvalidInputError("multi-index has the wrong length")
            if c:
                key = pack(idx)
                coeffs[key] = coeffs.get(key, 0) + c
        return cls(nvars, coeffs, scale)

    @classmethod
    def one(cls, nvars, exact=True) -> "RealPolynomial":
        return cls(nvars, {0: 1 if exact else 1.0}, Fraction(1) if exact else 1.0)

    @property
    def exact(self) -> bool:
        return isinstance(self.scale, Fraction)

    def terms(self) -> dict:
        """Monomials as exponent tuples mapped to their (scaled) coefficients."""
        return {unpack(k, self.nvars): c * self.scale for k, c in self.coeffs.items()}

    def degrees(self) -> set:
        return {sum(unpack(k, self.nvars)) for k in self.coeffs}

    @property
    def degree(self) -> int:
        return max(self.degrees(), default=0)

    def __len__(self):
        return len(self.coeffs)

    def __mul__(self, other: "RealPolynomial") -> "RealPolynomial":
        if other.nvars != self.nvars:
            raise InvalidInputError("polynomials live in different variable sets")
        out: dict = {}
        get = out.get
        for ka, ca in self.coeffs.items():
            for kb, cb in other.coeffs.items():
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
        out = {k: c for k, c in out.items() if c}
        return RealPolynomial(self.nvars, out, self.scale * other.scale)

    def __pow__(self, k: int) -> "RealPolynomial":
        result = RealPolynomial.one(self.nvars, self.exact)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = 0.0
        for key, c in self.coeffs.items():
            e = unpack(key, self.nvars)
            total += float(c) * float(np.prod(x ** np.array(e)))
        return total * float(self.scale)

    def integrate(self, times=None):
        """Integral over S^(nvars-1), optionally times an extra monomial.

        Returns ``(coef, value)``: ``coef`` is the exact rational factor of
        ``pi**(nvars//2)`` (``None`` in float mode) and ``value`` a float.
        """
        m = self.nvars
        shift = pack(times) if times is not None else 0
        even_mask = 0
        for i in range(m):
            even_mask |= 1 << (_BITS * i)
        exact = self.exact
        acc = Fraction(0) if exact else []
        for key, c in self.coeffs.items():
            key += shift
            if key & even_mask:
                continue
            halves = tuple(sorted(((key >> (_BITS * i)) & _MASK) >> 1 for i in range(m)))
            w = _even_integral(halves, m)
            if exact:
                acc += c * w
            else:
                acc.append(c * (w.numerator / w.denominator))
        if exact:
            coef = acc * self.scale
            return coef, float(coef) * math.pi ** (m // 2)
        return None, math.fsum(acc) * self.scale * math.pi ** (m // 2)


def quadratic_form(obs, d: int, exact: bool) -> RealPolynomial:
    """``<x|O|x>`` in the variables ``(Re x, Im x)``."""
    nv = 2 * d
    terms: dict = {}

    def add(i, j, c):
        e = [0] * nv
        e[i] += 1
        e[j] += 1
        key = pack(e)
        terms[key] = terms.get(key, 0) + c

    if exact:
        entries = obs.exact_entries()
        re = [[z.re for z in row] for row in entries]
        im = [[z.im for z in row] for row in entries]
    else:
        re = obs.matrix.real.tolist()
        im = obs.matrix.imag.tolist()
    for j in range(d):
        for k in range(d):
            r, s = re[j][k], im[j][k]
            if r:
                add(j, k, r)
                add(d + j, d + k, r)
            if s:
                # conj(x_j) x_k has imaginary part a_j b_k - b_j a_k
                add(j, d + k, -s)
                add(d + j, k, s)
    if exact:
        lcm = 1
        for c in terms.values():
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        coeffs = {k: int(c * lcm) for k, c in terms.items() if c}
        return RealPolynomial(nv, coeffs, Fraction(1, lcm))
    return RealPolynomial(nv, {k: float(c) for k, c in terms.items() if c}, 1.0)


def _resolve_exact(obs: ObservationSet, exact):
    if exact is None:
        return obs.is_exact
    if exact and not obs.is_exact:
        raise InvalidInputError("exact mode needs observations with rational entries")
    return bool(exact)


def check_degree(n: int, max_degree: int = DEFAULT_MAX_DEGREE, extra: int = 0):
    degree = 2 * n + extra
    if degree > max_degree:
        raise ResourceLimitError(
            f"expansion degree {degree} exceeds the guard {max_degree}"
        )
    if degree > _MAX_EXPONENT:
        raise ResourceLimitError(f"degree {degree} exceeds the packing limit {_MAX_EXPONENT}")


def likelihood_polynomial(
    obs: ObservationSet, exact=None, max_degree: int = DEFAULT_MAX_DEGREE
) -> RealPolynomial:
    """Expand ``prod_i <x|O_i|x>`` into monomials in ``(Re x, Im x)``.

    Parameters
    ----------
    obs : ObservationSet
    exact : bool or None
        Rational coefficients; ``None`` picks exact mode whenever every
        observation has rational entries.
    max_degree : int
        Guard on ``2n``.

    Raises
    ------
    ResourceLimitError
        If ``2n`` exceeds ``max_degree``.
    """
    check_degree(obs.n, max_degree)
    exact = _resolve_exact(obs, exact)
    d = obs.d
    poly = RealPolynomial.one(2 * d, exact)
    for o, m in obs.items:
        q = quadratic_form(o, d, exact)
        poly = poly * (q**m)
        log.debug("expanded %s observations: %d monomials", m, len(poly))
    return poly


@dataclass(frozen=True)
class PNorm:
    """Normalising constant in both conventions.

    ``raw`` is the surface integral over S^(2d-1); ``normalized`` divides by
    the sphere area (Haar probability).  ``exact_normalized`` is rational when
    the computation ran in exact mode, and ``raw = exact_normalized * area``.
    """

    d: int
    raw: float
    normalized: float
    exact_normalized: Fraction | None = None

    def value(self, convention: str = "normalized") -> float:
        if convention == "normalized":
            return self.normalized
        if convention == "raw":
            return self.raw
        raise InvalidInputError(f"unknown convention {convention!r}")

    @property
    def exact_raw(self) -> SphereIntegral | None:
        if self.exact_normalized is None:
            return None
        return sphere_area(2 * self.d) * self.exact_normalized


def pnorm_from_polynomial(poly: RealPolynomial, d: int, times=None) -> PNorm:
    coef, raw = poly.integrate(times)
    area = sphere_area(2 * d)
    if coef is not None:
        exact_norm = coef / area.coef
        return PNorm(d, raw, float(exact_norm), exact_norm)
    return PNorm(d, raw, raw / area.value, None)


def pnorm_exact(obs: ObservationSet, exact=None, max_degree: int = DEFAULT_MAX_DEGREE) -> PNorm:
    """``p_norm`` by monomial expansion and term-by-term sphere integration."""
    poly = likelihood_polynomial(obs, exact, max_degree)
    return pnorm_from_polynomial(poly, obs.d)


def haar_states(rng: np.random.Generator, d: int, size: int) -> np.ndarray:
    """``size`` Haar-random unit vectors in C^d, one per row."""
    z = rng.standard_normal((size, d)) + 1j * rng.standard_normal((size, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def likelihoods(states: np.ndarray, obs: ObservationSet) -> np.ndarray:
    """Likelihood of ``obs`` at each row of ``states``."""
    out = np.ones(states.shape[0])
    for o, m in obs.items:
        if o.is_rank_one:
            q = np.abs(states @ o.vector.conj()) ** 2
        else:
            q = np.einsum("si,ij,sj->s", states.conj(), o.matrix, states).real
        out *= np.clip(q, 0.0, None) ** m
    return out


def pnorm_montecarlo(obs: ObservationSet, samples: int, seed: int, batch: int = 200_000):
    """Mean likelihood over Haar-random pure states, with its standard error.

    Normalised convention.  Deterministic for a fixed ``seed``.
    """
    if samples < 100:
        raise InvalidInputError("need at least 100 samples")
    if not obs.items:
        return 1.0, 0.0
    rng = np.random.default_rng(seed)
    # batch means and centred sums of squares, merged pairwise (stable for tiny variances)
    count, mean, m2 = 0, 0.0, 0.0
    while count < samples:
        k = min(batch, samples - count)
        vals = likelihoods(haar_states(rng, obs.d, k), obs)
        bmean = math.fsum(vals) / k
        bm2 = math.fsum((vals - bmean) ** 2)
        delta = bmean - mean
        total = count + k
        mean += delta * k / total
        m2 += bm2 + delta * delta * count * k / total
        count = total
    var = m2 / (samples - 1)
    return mean, math.sqrt(var / samples)
