"""Pairing sums, permanents and the Gram embedding of rank-one observations.

Kernels accept ``numpy`` arrays or nested lists; entries may be ints,
:class:`~fractions.Fraction` (exact mode) or floats.  Zero entries are skipped,
so the pairing-sum and sparse-permanent kernels run on large sparse matrices
whose nonzero pattern has a narrow frontier in the given vertex order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConditioningError, InvalidInputError, ResourceLimitError
from .hilbert import ObservationSet
from .sphere import SphereIntegral, monomial_sphere_integral, sphere_area

PAIRING_GUARD = 20
RYSER_GUARD = 22
BRUTE_GUARD = 9
SYM_TOL = 1e-12


def _rows(M) -> list:
    """Square matrix as a list of lists of Python scalars."""
    if isinstance(M, np.ndarray):
        if M.dtype == object:
            rows = [list(r) for r in M]
        else:
            rows = M.tolist()
    else:
        rows = [list(r) for r in M]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise InvalidInputError("matrix must be square")
    return rows


def _is_exact(rows) -> bool:
    return all(isinstance(x, (int, Fraction)) for r in rows for x in r)


def _check_symmetric(rows):
    n = len(rows)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = rows[i][j], rows[j][i]
            if a != b and abs(a - b) > SYM_TOL:
                raise InvalidInputError(f"matrix is not symmetric at ({i}, {j})")


def pairing_sum(S, max_size: int = PAIRING_GUARD):
    """Sum over perfect pairings of ``{0..2n-1}`` of ``prod S[i][j]``.

    Frontier dynamic programme: vertices are taken in order, each unmatched
    vertex is paired with a later neighbour, and the state is the set of later
    vertices already used.  Exact for integer/rational input.

    >>> pairing_sum(np.ones((4, 4)))
    3.0
    """
    rows = _rows(S)
    n = len(rows)
    if n % 2:
        raise InvalidInputError("pairing sums need an even number of indices")
    if n > max_size:
        raise ResourceLimitError(f"size {n} exceeds the pairing guard {max_size}")
    _check_symmetric(rows)
    zero = 0 if _is_exact(rows) else 0.0
    if n == 0:
        return zero + 1
    nbrs = [[(j, rows[i][j]) for j in range(i + 1, n) if rows[i][j]] for i in range(n)]
    states = {0: zero + 1}
    for i in range(n):
        bit = 1 << i
        new: dict = {}
        for mask, val in states.items():
            if mask & bit:
                key = mask ^ bit
                new[key] = new.get(key, zero) + val
                continue
            for j, w in nbrs[i]:
                jb = 1 << j
                if not mask & jb:
                    key = mask | jb
                    new[key] = new.get(key, zero) + val * w
        states = new
        if not states:
            return zero
    return states.get(0, zero)


def pairings(n: int):
    """Yield every perfect pairing of ``range(n)`` as a tuple of pairs."""
    if n % 2:
        return
    def rec(remaining):
        if not remaining:
            yield ()
            return
        i = remaining[0]
        for pos in range(1, len(remaining)):
            j = remaining[pos]
            rest = remaining[1:pos] + remaining[pos + 1:]
            for tail in rec(rest):
                yield ((i, j),) + tail
    yield from rec(tuple(range(n)))


def pairing_sum_bruteforce(S, max_size: int = 14):
    """Explicit enumeration of all ``(2n-1)!!`` pairings; the oracle path."""
    rows = _rows(S)
    n = len(rows)
    if n % 2:
        raise InvalidInputError("pairing sums need an even number of indices")
    if n > max_size:
        raise ResourceLimitError(f"size {n} exceeds the enumeration guard {max_size}")
    total = 0 if _is_exact(rows) else 0.0
    for p in pairings(n):
        term = 1
        for i, j in p:
            term *= rows[i][j]
        total += term
    return total


def permanent(M, max_size: int = RYSER_GUARD):
    """Permanent by Ryser's formula with Gray-code updates, ``O(2^n n)``.

    Exact for integer/rational entries.
    """
    rows = _rows(M)
    n = len(rows)
    if n > max_size:
        raise ResourceLimitError(f"size {n} exceeds the Ryser guard {max_size}")
    if n == 0:
        return 1
    exact = _is_exact(rows)
    zero = 0 if exact else 0.0
    if not exact:
        a = np.array(rows, dtype=complex if any(isinstance(x, complex) for r in rows for x in r) else float)
        sums = np.zeros(n, dtype=a.dtype)
        total = a.dtype.type(0)
        prev = 0
        for k in range(1, 1 << n):
            gray = k ^ (k >> 1)
            j = (gray ^ prev).bit_length() - 1
            if gray > prev:
                sums += a[:, j]
            else:
                sums -= a[:, j]
            prev = gray
            p = np.prod(sums)
            total += -p if bin(gray).count("1") % 2 else p
        out = total if n % 2 == 0 else -total
        return out.item()
    cols = [[rows[i][j] for i in range(n)] for j in range(n)]
    sums = [zero] * n
    total = zero
    prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        j = (gray ^ prev).bit_length() - 1
        col = cols[j]
        if gray > prev:
            sums = [s + c for s, c in zip(sums, col)]
        else:
            sums = [s - c for s, c in zip(sums, col)]
        prev = gray
        p = math.prod(sums)
        if bin(gray).count("1") % 2:
            total -= p
        else:
            total += p
    return total if n % 2 == 0 else -total


def permanent_bruteforce(M, max_size: int = BRUTE_GUARD):
    """Sum over all permutations; oracle for :func:`permanent`."""
    rows = _rows(M)
    n = len(rows)
    if n > max_size:
        raise ResourceLimitError(f"size {n} exceeds the brute-force guard {max_size}")
    total = 0 if _is_exact(rows) else 0.0
    for sigma in itertools.permutations(range(n)):
        term = 1
        for i in range(n):
            term *= rows[i][sigma[i]]
            if not term:
                break
        total += term
    return total


def permanent_sparse(M):
    """Permanent by a row-by-row frontier DP over used columns.

    No size guard: cost depends on how many column subsets are reachable,
    which stays small for banded or block-sparse matrices.
    """
    rows = _rows(M)
    n = len(rows)
    exact = _is_exact(rows)
    zero = 0 if exact else 0.0
    # a column can be forgotten once no later row touches it
    last_row = [-1] * n
    nz = []
    for i, r in enumerate(rows):
        nz.append([(j, w) for j, w in enumerate(r) if w])
        for j, _ in nz[-1]:
            last_row[j] = i
    if any(lr < 0 for lr in last_row):
        return zero
    closing = [[] for _ in range(n)]
    for j, lr in enumerate(last_row):
        closing[lr].append(j)
    states = {0: zero + 1}
    for i in range(n):
        new: dict = {}
        close_mask = 0
        for j in closing[i]:
            close_mask |= 1 << j
        for mask, val in states.items():
            for j, w in nz[i]:
                jb = 1 << j
                if mask & jb:
                    continue
                key = mask | jb
                if key & close_mask != close_mask:
                    continue
                key &= ~close_mask
                new[key] = new.get(key, zero) + val * w
        states = new
        if not states:
            return zero
    return states.get(0, zero)


@dataclass(frozen=True, eq=False)
class DoubledMatrix:
    """Symmetric ``2n x 2n`` matrix whose rows and columns come in equal pairs."""

    matrix: np.ndarray
    unit_diagonal: bool = field(default=False)

    def __post_init__(self):
        validate_doubled(self.matrix, self.unit_diagonal)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def validate_doubled(M, unit_diagonal=False, tol: float = SYM_TOL):
    rows = _rows(M)
    n = len(rows)
    if n % 2:
        raise InvalidInputError("a doubled matrix has even size")
    _check_symmetric(rows)
    for k in range(0, n, 2):
        for j in range(n):
            if abs(rows[k][j] - rows[k + 1][j]) > tol:
                raise InvalidInputError(f"rows {k} and {k + 1} differ")
    if unit_diagonal and any(abs(rows[i][i] - 1) > tol for i in range(n)):
        raise InvalidInputError("diagonal is not all ones")


def doubled_identity(n_pairs: int, exact: bool = False):
    """``I[2] = I (x) J_2``: ones on each 2x2 diagonal block."""
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    size = 2 * n_pairs
    out = [[zero] * size for _ in range(size)]
    for k in range(0, size, 2):
        for a in (k, k + 1):
            for b in (k, k + 1):
                out[a][b] = one
    return np.array(out, dtype=object) if exact else np.array(out, dtype=float)


def real_embedding(v) -> np.ndarray:
    """Conjugate-linear map ``C^d -> R^(2d)``, ``v -> (Re v, -Im v)``."""
    v = np.asarray(v, dtype=complex)
    return np.concatenate([v.real, -v.imag])


def gram_from_observations(obs: ObservationSet) -> DoubledMatrix:
    """Doubled Gram matrix of the embedded rank-one observation vectors."""
    if not obs.rank_one:
        raise InvalidInputError("Gram embedding needs rank-one observations")
    vecs = np.array([real_embedding(o.vector) for o in obs.expanded()])
    if vecs.size == 0:
        return DoubledMatrix(np.zeros((0, 0)), True)
    X = np.repeat(vecs, 2, axis=0)
    A = X @ X.T
    A = (A + A.T) / 2
    return DoubledMatrix(A, True)


def double_factorial(k: int) -> int:
    """``k!!`` with ``(-1)!! = 0!! = 1``."""
    return math.prod(range(k, 0, -2)) if k > 0 else 1


@dataclass(frozen=True)
class WickConstant:
    """Proportionality constant between a sphere integral of linear forms and a pairing sum.

    ``integral_{S^(2d-1)} prod_{j<2n} (x . v_j) dx = value * pairing_sum(v_i . v_j)``.
    ``printed`` is ``2 pi^d 2^n / (d+n-1)!`` for comparison.
    """

    d: int
    n: int
    exact: SphereIntegral

    @property
    def value(self) -> float:
        return self.exact.value

    @property
    def printed(self) -> float:
        return 2 * math.pi**self.d * 2**self.n / math.factorial(self.d + self.n - 1)

    @property
    def ratio_printed(self) -> float:
        return self.printed / self.value


def wick_constant(d: int, n: int) -> WickConstant:
    """``C = (1/(2n-1)!!) * integral of x_1^(2n)`` over S^(2d-1)."""
    if d < 1 or n < 0:
        raise InvalidInputError("need d >= 1 and n >= 0")
    idx = (2 * n,) + (0,) * (2 * d - 1)
    moment = monomial_sphere_integral(idx)
    return WickConstant(d, n, SphereIntegral(moment.coef / double_factorial(2 * n - 1), moment.pi_power))


def pnorm_via_pairings(obs: ObservationSet, max_size: int = PAIRING_GUARD) -> float:
    """``C(d, n) * pairing_sum(Gram)``, the pairing-formula value.

    Uses the surface-integral scale (compare against the raw ``p_norm``).
    """
    n = obs.n
    if n == 0:
        return sphere_area(2 * obs.d).value
    A = gram_from_observations(obs)
    return wick_constant(obs.d, n).value * pairing_sum(A.matrix, max_size)


@dataclass(frozen=True)
class Extraction:
    """Result of :func:`extract_base_permanent`."""

    value: float | Fraction
    functional: str
    degree: int
    alpha_max: float | Fraction
    nodes: tuple
    evaluations: tuple
    condition: float


def _functional(kind: str):
    if kind == "pairing":
        return pairing_sum, lambda size: size // 2
    if kind == "permanent":
        return permanent, lambda size: size
    raise InvalidInputError(f"unknown functional {kind!r}")


def alpha_window(A) -> float:
    """``1/|lambda_min(A - I[2])|`` (or 1 when that matrix is PSD)."""
    a = np.array(_rows(A), dtype=float)
    B = a - doubled_identity(a.shape[0] // 2)
    lam = float(np.linalg.eigvalsh((B + B.T) / 2).min())
    return 1.0 if lam >= -1e-15 else 1.0 / abs(lam)


def leading_coefficient(nodes, values):
    """Leading coefficient of the interpolating polynomial through the points.

    ``sum_j y_j / prod_{k != j} (x_j - x_k)``; exact for rational input.
    """
    total = 0
    for j, (xj, yj) in enumerate(zip(nodes, values)):
        w = 1
        for k, xk in enumerate(nodes):
            if k != j:
                w *= xj - xk
        total += yj / w
    return total


def interpolation_nodes(count: int, alpha_max, kind: str = "equispaced"):
    if kind == "equispaced":
        if isinstance(alpha_max, Fraction):
            return tuple(alpha_max * Fraction(j, count) for j in range(1, count + 1))
        return tuple(alpha_max * j / count for j in range(1, count + 1))
    if kind == "chebyshev":
        t = [(1 - math.cos(math.pi * (2 * j + 1) / (2 * count))) / 2 for j in range(count)]
        return tuple(alpha_max * x for x in t)
    raise InvalidInputError(f"unknown node kind {kind!r}")


def extract_base_permanent(
    A,
    functional: str = "permanent",
    nodes: str = "equispaced",
    exact: bool = False,
    max_condition: float = 1e13,
    max_size: int | None = None,
) -> Extraction:
    """Recover ``F(A - I[2])`` from evaluations of ``F(I[2] + alpha (A - I[2]))``.

    ``F`` is the pairing sum (degree ``size/2`` in ``alpha``) or the permanent
    (degree ``size``).  Nodes lie in ``(0, alpha_max]`` with
    ``alpha_max = 1/|lambda_min(A - I[2])|``, where every pencil member of a
    doubled ``A`` is PSD.  The leading interpolation coefficient is returned.

    Raises
    ------
    ConditioningError
        If the Vandermonde system on the rescaled nodes is too ill-conditioned
        (float mode only).
    """
    rows = _rows(A)
    size = len(rows)
    validate_doubled(rows, unit_diagonal=True)
    F, degree_of = _functional(functional)
    D = degree_of(size)
    amax = alpha_window(rows)
    if exact:
        # rational lower bound on the window keeps every node admissible
        amax_q = Fraction(amax * (1 - 1e-9)).limit_denominator(10**6)
        if amax_q > Fraction(amax):
            amax_q = Fraction(math.floor(amax * 10**6), 10**6)
        amax = amax_q
        base = [[Fraction(x) for x in r] for r in rows]
        I2 = doubled_identity(size // 2, exact=True).tolist()
    else:
        base = [[float(x) for x in r] for r in rows]
        I2 = doubled_identity(size // 2).tolist()
    B = [[base[i][j] - I2[i][j] for j in range(size)] for i in range(size)]
    xs = interpolation_nodes(D + 1, amax, nodes)
    t = np.array([float(x) / float(amax) for x in xs])
    cond = float(np.linalg.cond(np.vander(t, D + 1))) if D > 0 else 1.0
    if not exact and cond > max_condition:
        raise ConditioningError(
            f"interpolation condition {cond:.3g} exceeds {max_condition:.3g}",
            [float(x) for x in xs],
            cond,
        )
    kwargs = {} if max_size is None else {"max_size": max_size}
    ys = []
    for a in xs:
        Aa = [[I2[i][j] + a * B[i][j] for j in range(size)] for i in range(size)]
        ys.append(F(Aa, **kwargs))
    if exact:
        value = leading_coefficient(xs, ys)
    else:
        # interpolate in t = alpha / alpha_max, then undo the scaling
        value = leading_coefficient(tuple(t), ys) / float(amax) ** D
    return Extraction(value, functional, D, amax, tuple(xs), tuple(ys), cond)


def load_matrix(data) -> np.ndarray:
    """Parse ``{"size": m, "rows": [[...]]}``."""
    try:
        m = int(data["size"])
        rows = data["rows"]
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed matrix: {exc}") from None
    if len(rows) != m or any(len(r) != m for r in rows):
        raise InvalidInputError("matrix rows do not match the declared size")
    parsed = [[_parse_entry(x) for x in r] for r in rows]
    if _is_exact(parsed):
        return np.array(parsed, dtype=object)
    return np.array(parsed, dtype=float)


def _parse_entry(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return x
    return float(x)


def dump_matrix(M) -> dict:
    rows = _rows(M)
    out = []
    for r in rows:
        out.append([str(x) if isinstance(x, Fraction) else x for x in r])
    return {"size": len(rows), "rows": out}
