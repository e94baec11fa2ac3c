"""Exact arithmetic helpers.

Two small value types live here:

* :class:`GaussQ`, a Gaussian rational ``re + i*im`` with :class:`~fractions.Fraction`
  parts.  Every vector the hardness constructions use (basis states,
  ``(|j> +- i|k>)``, clause states, binarized states) has Gaussian-integer
  entries up to a real normalisation, so squared overlaps are rational.
* :class:`LogExact`, a positive rational raised to integer powers, stored as a
  prime-exponent map.  Likelihoods with multiplicities in the millions stay
  exact and cheap to compare, and repetition is plain exponent scaling.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

from sympy import factorint

from .errors import InvalidInputError


class GaussQ:
    """Gaussian rational number."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, other):
        other = _as_gq(other)
        return GaussQ(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_gq(other)
        return GaussQ(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __mul__(self, other):
        other = _as_gq(other)
        return GaussQ(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def conjugate(self):
        return GaussQ(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __eq__(self, other):
        try:
            other = _as_gq(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GaussQ({self.re}, {self.im})"


def _as_gq(x) -> GaussQ:
    if isinstance(x, GaussQ):
        return x
    if isinstance(x, (int, Rational)):
        return GaussQ(x, 0)
    raise TypeError(f"cannot treat {type(x).__name__} as a Gaussian rational")


def _exact_real(x):
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float) and math.isfinite(x) and x.is_integer():
        return Fraction(int(x))
    return None


def to_gauss_vector(values):
    """Convert ``values`` to a tuple of :class:`GaussQ`, or ``None``.

    Integers, fractions, integral floats, complex numbers with integral parts
    and ``GaussQ`` are accepted.  Anything else means the vector has no exact
    representation and ``None`` is returned.
    """
    out = []
    for x in values:
        if isinstance(x, GaussQ):
            out.append(x)
            continue
        if hasattr(x, "item") and not isinstance(x, Rational):
            x = x.item()  # numpy scalar
        if isinstance(x, complex):
            re, im = _exact_real(x.real), _exact_real(x.imag)
        else:
            re, im = _exact_real(x), Fraction(0)
        if re is None or im is None:
            return None
        out.append(GaussQ(re, im))
    return tuple(out)


def gauss_norm2(v) -> Fraction:
    return sum((z.abs2() for z in v), Fraction(0))


def gauss_inner(u, v) -> GaussQ:
    """``<u|v>`` with the conjugate on the left argument."""
    acc = GaussQ()
    for a, b in zip(u, v):
        acc = acc + a.conjugate() * b
    return acc


def squared_overlap(u, v) -> Fraction:
    """``|<u|v>|^2 / (|u|^2 |v|^2)`` for unnormalised Gaussian vectors."""
    return gauss_inner(u, v).abs2() / (gauss_norm2(u) * gauss_norm2(v))


@lru_cache(maxsize=4096)
def _factor(n: int):
    return tuple(sorted(factorint(n).items()))


class LogExact:
    """Exact positive rational (or zero) kept as prime exponents.

    ``LogExact.from_fraction(Fraction(32, 729)) ** 5`` stays exact without
    building the 5-fold power.  Zero is represented explicitly so that a
    vanishing likelihood survives products.
    """

    __slots__ = ("_factors", "_zero")

    def __init__(self, factors=None, zero=False):
        self._zero = bool(zero)
        if self._zero:
            self._factors = {}
        else:
            self._factors = {p: e for p, e in (factors or {}).items() if e != 0}

    @classmethod
    def one(cls):
        return cls()

    @classmethod
    def zero(cls):
        return cls(zero=True)

    @classmethod
    def from_fraction(cls, q) -> "LogExact":
        q = Fraction(q)
        if q < 0:
            raise InvalidInputError("LogExact only represents nonnegative values")
        if q == 0:
            return cls.zero()
        factors = {}
        for p, e in _factor(q.numerator):
            factors[p] = factors.get(p, 0) + e
        for p, e in _factor(q.denominator):
            factors[p] = factors.get(p, 0) - e
        return cls(factors)

    @property
    def is_zero(self) -> bool:
        return self._zero

    @property
    def factors(self) -> dict:
        return dict(self._factors)

    def __mul__(self, other):
        if not isinstance(other, LogExact):
            other = LogExact.from_fraction(other)
        if self._zero or other._zero:
            return LogExact.zero()
        out = dict(self._factors)
        for p, e in other._factors.items():
            out[p] = out.get(p, 0) + e
        return LogExact(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogExact):
            other = LogExact.from_fraction(other)
        if other._zero:
            raise ZeroDivisionError("division by an exact zero")
        return self * (other ** -1)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("LogExact powers must be integers")
        if self._zero:
            if k <= 0:
                raise ZeroDivisionError("zero to a nonpositive power")
            return LogExact.zero()
        return LogExact({p: e * k for p, e in self._factors.items()})

    def log(self) -> float:
        """Natural logarithm as a float; ``-inf`` for zero."""
        if self._zero:
            return -math.inf
        return math.fsum(e * math.log(p) for p, e in sorted(self._factors.items()))

    def to_fraction(self) -> Fraction:
        if self._zero:
            return Fraction(0)
        num, den = 1, 1
        for p, e in self._factors.items():
            if e > 0:
                num *= p**e
            else:
                den *= p ** (-e)
        return Fraction(num, den)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LogExact.from_fraction(other)
        if not isinstance(other, LogExact):
            return NotImplemented
        return self._zero == other._zero and self._factors == other._factors

    def __hash__(self):
        return hash((self._zero, tuple(sorted(self._factors.items()))))

    def __repr__(self):
        if self._zero:
            return "LogExact(0)"
        body = " * ".join(f"{p}^{e}" for p, e in sorted(self._factors.items()))
        return f"LogExact({body or '1'})"

    def to_json(self):
        if self._zero:
            return {"zero": True}
        return {"factors": {str(p): e for p, e in sorted(self._factors.items())}}

    @classmethod
    def from_json(cls, data):
        if data.get("zero"):
            return cls.zero()
        return cls({int(p): int(e) for p, e in data["factors"].items()})
