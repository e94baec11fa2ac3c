"""Cycle covers, double cycle covers and the chain-amplified reduction to pairing sums.

A double cycle cover of a digraph picks a multiplicity 0, 1 or 2 for every
arc so that each vertex has in- and out-degree 2.  Two weightings appear:

* ``"multiset"``: each cover counts ``prod w_e^m_e``.
* ``"sym"``: each cover counts ``prod w_e^m_e / m_e!``.  This is the one
  the doubled graph sees: ``per(adj D(G)) = 4^|V| * DCC_sym(G)``.

Chains of two-terminal gadgets amplify covers whose flow through every
original vertex is exactly one, which turns a double-cover count back into an
ordinary cycle-cover count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError, NotFoundError, ResourceLimitError
from .matchperm import (
    interpolation_nodes,
    leading_coefficient,
    pairing_sum,
    permanent_sparse,
)

CYCLE_COVER_GUARD = 9
DOUBLE_COVER_GUARD = 8
WEIGHTINGS = ("multiset", "sym")


def _weight(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise InvalidInputError("edge weights must be finite")
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True)
class WeightedDigraph:
    """Digraph on ``0..n-1`` with rational arc weights; loops allowed, parallel arcs not."""

    n: int
    edges: tuple = ()

    def __post_init__(self):
        if self.n < 0:
            raise InvalidInputError("vertex count must be nonnegative")
        seen = set()
        clean = []
        for e in self.edges:
            if len(e) == 2:
                u, v, w = e[0], e[1], 1
            else:
                u, v, w = e
            u, v = int(u), int(v)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InvalidInputError(f"arc ({u}, {v}) leaves the vertex range")
            if (u, v) in seen:
                raise InvalidInputError(f"parallel arc ({u}, {v})")
            seen.add((u, v))
            w = _weight(w)
            if w:
                clean.append((u, v, w))
        object.__setattr__(self, "edges", tuple(clean))

    def adjacency(self) -> list:
        A = [[Fraction(0)] * self.n for _ in range(self.n)]
        for u, v, w in self.edges:
            A[u][v] = w
        return A

    @classmethod
    def from_adjacency(cls, A) -> "WeightedDigraph":
        n = len(A)
        return cls(n, tuple((i, j, A[i][j]) for i in range(n) for j in range(n) if A[i][j]))

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [[u, v, str(w)] for u, v, w in self.edges]}

    @classmethod
    def from_json(cls, data) -> "WeightedDigraph":
        try:
            return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"malformed graph: {exc}") from None


def count_cycle_covers(G: WeightedDigraph, max_vertices: int = CYCLE_COVER_GUARD) -> Fraction:
    """Weighted sum over successor permutations using only existing arcs."""
    if G.n > max_vertices:
        raise ResourceLimitError(f"{G.n} vertices exceed the cycle-cover guard {max_vertices}")
    succ = [[] for _ in range(G.n)]
    for u, v, w in G.edges:
        succ[u].append((v, w))

    def rec(u, used):
        if u == G.n:
            return Fraction(1)
        total = Fraction(0)
        for v, w in succ[u]:
            if not used >> v & 1:
                total += w * rec(u + 1, used | 1 << v)
        return total

    return rec(0, 0)


def _double_cover_sum(n, edges, need_in, need_out, weighting, on_complete=None):
    """Backtracking over arc multiplicities with exact degree targets.

    ``need_in[v]``/``need_out[v]`` are exact targets (``None`` = free).
    ``on_complete(deg_in, deg_out, weight)`` receives every complete
    assignment and returns its contribution; by default the weight itself.
    """
    if weighting not in WEIGHTINGS:
        raise InvalidInputError(f"unknown weighting {weighting!r}")
    sym = weighting == "sym"
    E = len(edges)
    last_out = [-1] * n
    last_in = [-1] * n
    for k, (u, v, _) in enumerate(edges):
        last_out[u] = k
        last_in[v] = k
    # vertices whose degrees are final once arc k is decided
    closes = [[] for _ in range(E)]
    for v in range(n):
        k = max(last_out[v], last_in[v])
        if k >= 0:
            closes[k].append(v)
    for v in range(n):
        if last_out[v] < 0 and last_in[v] < 0:
            if (need_in[v] or 0) or (need_out[v] or 0):
                return Fraction(0)
    cap_in = [2 if t is None else t for t in need_in]
    cap_out = [2 if t is None else t for t in need_out]
    deg_in = [0] * n
    deg_out = [0] * n
    wpow = [(Fraction(1), w, w * w / (2 if sym else 1)) for _, _, w in edges]
    total = Fraction(0)

    def rec(k, acc):
        nonlocal total
        if k == E:
            total += on_complete(deg_in, deg_out, acc) if on_complete else acc
            return
        u, v, _ = edges[k]
        for m in (0, 1, 2):
            if deg_out[u] + m > cap_out[u] or deg_in[v] + m > cap_in[v]:
                break
            deg_out[u] += m
            deg_in[v] += m
            ok = True
            for x in closes[k]:
                if (need_in[x] is not None and deg_in[x] != need_in[x]) or (
                    need_out[x] is not None and deg_out[x] != need_out[x]
                ):
                    ok = False
                    break
            if ok:
                rec(k + 1, acc * wpow[k][m] if m else acc)
            deg_out[u] -= m
            deg_in[v] -= m

    rec(0, Fraction(1))
    return total


def count_double_cycle_covers(
    G: WeightedDigraph,
    terminals: tuple | None = None,
    weighting: str = "multiset",
    max_vertices: int = DOUBLE_COVER_GUARD,
) -> Fraction:
    """Weighted count of double cycle covers.

    With ``terminals=(s, t, f)`` the source ``s`` must have out-degree ``f``
    and in-degree 0, the sink ``t`` in-degree ``f`` and out-degree 0, and every
    other vertex in- and out-degree 2.
    """
    if G.n > max_vertices:
        raise ResourceLimitError(f"{G.n} vertices exceed the double-cover guard {max_vertices}")
    need_in = [2] * G.n
    need_out = [2] * G.n
    if terminals is not None:
        s, t, f = terminals
        if f not in (0, 1, 2) or s == t or not (0 <= s < G.n and 0 <= t < G.n):
            raise InvalidInputError("terminals need distinct vertices and net flow 0, 1 or 2")
        need_out[s], need_in[s] = f, 0
        need_in[t], need_out[t] = f, 0
    return _double_cover_sum(G.n, G.edges, need_in, need_out, weighting)


@dataclass(frozen=True)
class FlowProfile:
    """Gadget cover counts at net flow 0, 1 and 2."""

    counts: tuple

    def __getitem__(self, f):
        return self.counts[f]


@dataclass(frozen=True)
class Gadget:
    """Two-terminal digraph: ``source`` only emits arcs, ``sink`` only receives them."""

    graph: WeightedDigraph
    source: int
    sink: int
    profile: FlowProfile
    sym_profile: FlowProfile

    @property
    def interior(self) -> list:
        return [v for v in range(self.graph.n) if v not in (self.source, self.sink)]

    def to_json(self) -> dict:
        return {
            "graph": self.graph.to_json(),
            "source": self.source,
            "sink": self.sink,
            "profile": [str(x) for x in self.profile.counts],
            "sym_profile": [str(x) for x in self.sym_profile.counts],
        }


def gadget_profile(G: WeightedDigraph, source: int, sink: int, weighting="multiset") -> FlowProfile:
    return FlowProfile(
        tuple(count_double_cycle_covers(G, (source, sink, f), weighting) for f in (0, 1, 2))
    )


TARGET_PROFILE = (3, 4, 3)


def search_gadget(max_vertices: int = 5, target=TARGET_PROFILE) -> Gadget:
    """First unit-weight gadget with the target profile in canonical order.

    Three interior vertices ``0, 1, 2``; source ``3``; sink ``4``.  Candidate
    arcs are the nine interior arcs (loops included), ``3 -> i`` and
    ``i -> 4``.  Arc sets are visited by size, then by bitmask.
    """
    if max_vertices < 5:
        raise InvalidInputError("the gadget needs at least 5 vertices")
    interior = (0, 1, 2)
    S, T = 3, 4
    arcs = [(a, b) for a in interior for b in interior]
    arcs += [(S, i) for i in interior] + [(i, T) for i in interior]
    target = tuple(Fraction(x) for x in target)
    masks = sorted(range(1 << len(arcs)), key=lambda m: (bin(m).count("1"), m))
    for mask in masks:
        edges = tuple(arcs[i] + (1,) for i in range(len(arcs)) if mask >> i & 1)
        G = WeightedDigraph(5, edges)
        prof = gadget_profile(G, S, T)
        if prof.counts == target:
            return Gadget(G, S, T, prof, gadget_profile(G, S, T, "sym"))
    raise NotFoundError(f"no gadget with profile {target} among 3-interior digraphs")


_GADGET_CACHE: dict = {}


def default_gadget() -> Gadget:
    if "g" not in _GADGET_CACHE:
        _GADGET_CACHE["g"] = search_gadget()
    return _GADGET_CACHE["g"]


def chain_graph(gadget: Gadget, links: int) -> tuple:
    """``links`` gadgets in series with looped join nodes; returns ``(graph, source, sink)``."""
    k = len(gadget.interior)
    n = 2 + links * k + (links - 1)
    src, snk = 0, 1
    edges = []
    # link i, then its join node: keeps the chain banded in vertex order
    joins = [2 + i * (k + 1) + k for i in range(links - 1)]
    for i in range(links):
        base = 2 + i * (k + 1)
        remap = {v: base + j for j, v in enumerate(gadget.interior)}
        remap[gadget.source] = src if i == 0 else joins[i - 1]
        remap[gadget.sink] = snk if i == links - 1 else joins[i]
        edges += [(remap[u], remap[v], w) for u, v, w in gadget.graph.edges]
    edges += [(j, j, 1) for j in joins]
    return WeightedDigraph(n, tuple(edges)), src, snk


def chain_length(n: int) -> int:
    """``ceil(1 + log_{4/3}(271 + n^(2n)))``, computed with integers."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    X = 271 + n ** (2 * n)
    L = 1
    # smallest L with (4/3)^(L-1) >= X
    while 4 ** (L - 1) < X * 3 ** (L - 1):
        L += 1
    return L


def desk_chain_length(n: int) -> int:
    """Smallest ``l`` with ``(3/4)^l (271 + n^(2n)) < 1``."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    X = 271 + n ** (2 * n)
    ell = 0
    while 4**ell <= X * 3**ell:
        ell += 1
    return ell


def flow_bound_holds(n: int) -> tuple:
    """``((1 + n + n(n+1)/2)^n, 271 + n^(2n))`` and whether the first is smaller."""
    lhs = Fraction(2 + 2 * n + n * (n + 1), 2) ** n
    rhs = 271 + n ** (2 * n)
    return lhs, rhs, lhs < rhs


def attach_chains(G: WeightedDigraph, gadget: Gadget, ell: int) -> WeightedDigraph:
    """Attach an ``ell``-link gadget chain at every vertex, both ends on the vertex.

    Vertex ``v`` of ``G`` keeps its index.  Per vertex the chain adds
    ``ell * |interior|`` gadget vertices and ``ell - 1`` looped join nodes.
    """
    if ell < 0:
        raise InvalidInputError("chain length must be nonnegative")
    if ell == 0:
        return G
    if gadget.profile.counts != tuple(Fraction(x) for x in TARGET_PROFILE):
        raise InvalidInputError("gadget profile must be (3, 4, 3)")
    chain, src, snk = chain_graph(gadget, ell)
    edges = list(G.edges)
    n = G.n
    per = chain.n - 2
    for v in range(G.n):
        base = n + v * per
        remap = {src: v, snk: v}
        for x in range(2, chain.n):
            remap[x] = base + x - 2
        edges += [(remap[a], remap[b], w) for a, b, w in chain.edges]
    return WeightedDigraph(n + G.n * per, tuple(edges))


def recover_count(Nprime, ell: int, n_vertices: int = 1, base=4) -> int:
    """``floor(N' / base^(ell * n_vertices))`` in exact arithmetic.

    Each of the ``n_vertices`` chains multiplies a proper cover by
    ``base^ell``; a single chain gives the familiar ``floor(N'/4^ell)``.
    """
    Nprime = Fraction(Nprime)
    if Nprime < 0:
        raise InvalidInputError("N' must be nonnegative")
    return math.floor(Nprime / Fraction(base) ** (ell * n_vertices))


def double_graph(G: WeightedDigraph) -> WeightedDigraph:
    """Twin every vertex (``v -> 2v, 2v+1``); each arc becomes four arcs."""
    edges = []
    for u, v, w in G.edges:
        for a in (0, 1):
            for b in (0, 1):
                edges.append((2 * u + a, 2 * v + b, w))
    return WeightedDigraph(2 * G.n, tuple(edges))


@dataclass(frozen=True)
class BipartiteLift:
    """Bipartite graph with biadjacency ``A``: left ``i`` joined to right ``j`` with weight ``A[i][j]``."""

    A: tuple

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def edges(self) -> list:
        return [(i, j, w) for i, row in enumerate(self.A) for j, w in enumerate(row) if w]

    def order(self) -> list:
        """Vertex order for the symmetric matrix; keeps twin pairs adjacent.

        Left vertices are ``0..m-1`` and right vertices ``m..2m-1``.
        """
        m = self.m
        if m % 2 == 0:
            out = []
            for k in range(0, m, 2):
                out += [k, k + 1, m + k, m + k + 1]
            return out
        return [x for k in range(m) for x in (k, m + k)]

    def symmetric_matrix(self) -> list:
        """``[[0, A], [A^T, 0]]`` in :meth:`order`; its pairing sum is ``per(A)``."""
        m = self.m
        zero = Fraction(0)
        full = [[zero] * (2 * m) for _ in range(2 * m)]
        for i, j, w in self.edges:
            full[i][m + j] = w
            full[m + j][i] = w
        p = self.order()
        return [[full[a][b] for b in p] for a in p]


def bipartite_lift(A) -> BipartiteLift:
    rows = [tuple(Fraction(x) for x in r) for r in A]
    if any(len(r) != len(rows) for r in rows):
        raise InvalidInputError("biadjacency matrix must be square")
    return BipartiteLift(tuple(rows))


def perfect_matching_count(lift: BipartiteLift, max_m: int = 7) -> Fraction:
    """Weighted perfect matchings by explicit enumeration (oracle)."""
    m = lift.m
    if m > max_m:
        raise ResourceLimitError(f"matching enumeration guard {max_m} exceeded")
    total = Fraction(0)
    for sigma in itertools.permutations(range(m)):
        term = Fraction(1)
        for i in range(m):
            term *= lift.A[i][sigma[i]]
            if not term:
                break
        total += term
    return total


# ---------------------------------------------------------------------------
# reduction plan


def chain_factors(gadget: Gadget, ell: int, weighting: str) -> dict:
    """Weight of one chain carrying net flow ``f``.

    ``P(f)^ell * J(f)^(ell-1)`` where ``J`` is the join-node loop weight: the
    loop carries ``2 - f``, and under the ``sym`` weighting a doubly used loop
    counts ``1/2``.
    """
    prof = gadget.profile if weighting == "multiset" else gadget.sym_profile
    if ell == 0:
        return {0: Fraction(1), 1: Fraction(0), 2: Fraction(0)}
    J = {0: Fraction(1, 2) if weighting == "sym" else Fraction(1), 1: Fraction(1), 2: Fraction(1)}
    return {f: Fraction(prof[f]) ** ell * J[f] ** (ell - 1) for f in (0, 1, 2)}


def flow_sum(G: WeightedDigraph, factors: dict, weighting: str = "multiset") -> Fraction:
    """Double-cover count of ``G`` with chains attached, by factoring over ``G``-flows.

    ``G`` arcs carry a flow with equal in/out degree ``g_v <= 2`` at every
    vertex; the chain at ``v`` then carries ``2 - g_v``.
    """
    total = Fraction(0)
    for degrees, w in flow_weights(G, weighting).items():
        for g in degrees:
            w *= factors[2 - g]
        total += w
    return total


def flow_weights(G: WeightedDigraph, weighting: str = "multiset") -> dict:
    """Total arc weight of the balanced ``G``-flows, grouped by degree vector."""
    n = G.n
    none = [None] * n
    groups: dict = {}

    def finish(deg_in, deg_out, acc):
        if deg_in == deg_out:
            key = tuple(deg_in)
            groups[key] = groups.get(key, 0) + acc
        return 0

    _double_cover_sum(n, G.edges, none, none, weighting, finish)
    return groups


@dataclass
class Stage:
    name: str
    vertices: int
    edges: int
    note: str = ""


@dataclass
class ReductionPlan:
    """Every stage of the graph-side reduction plus the recipe that undoes it."""

    graph: WeightedDigraph
    ell: int
    gadget: Gadget
    chained: WeightedDigraph
    stages: list
    lift_size: int
    pencil_degree: int
    recipe: list
    matrices: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "graph": self.graph.to_json(),
            "ell": self.ell,
            "gadget": self.gadget.to_json(),
            "stages": [vars(s) for s in self.stages],
            "lift_size": self.lift_size,
            "pencil_degree": self.pencil_degree,
            "node_count": self.pencil_degree + 1,
            "recipe": self.recipe,
        }


def compile_dcc_to_qbu(
    G: WeightedDigraph,
    ell: int | None = None,
    gadget: Gadget | None = None,
    max_vertices: int = 4,
) -> ReductionPlan:
    """Chain amplification, doubling and bipartite lift of ``G``.

    The lift's symmetric matrix ``M`` is doubled, so ``I[2] + alpha M`` is a
    PSD doubled Gram matrix for ``0 < alpha <= 1/|lambda_min(M)|``; its pairing
    sum is a polynomial of degree ``|M|/2`` whose leading coefficient is
    ``per(adj D(G'))``.
    """
    if G.n > max_vertices:
        raise ResourceLimitError(f"{G.n} vertices exceed the compile guard {max_vertices}")
    gadget = gadget or default_gadget()
    ell = desk_chain_length(max(G.n, 1)) if ell is None else ell
    chained = attach_chains(G, gadget, ell)
    doubled_n = 2 * chained.n
    stages = [
        Stage("input", G.n, len(G.edges)),
        Stage("chains", chained.n, len(chained.edges), f"{ell} links per vertex"),
        Stage("double", doubled_n, 4 * len(chained.edges), "every arc four times"),
        Stage("lift", 2 * doubled_n, 2 * 4 * len(chained.edges), "bipartite, doubled order"),
    ]
    Pq = gadget.sym_profile[1]
    recipe = [
        f"interpolate the pairing sum of I[2] + alpha*M at {doubled_n + 1} nodes; take the leading coefficient",
        f"leading coefficient = per(adj D(G')); divide by 4^{chained.n} to get the sym double-cover count of G'",
        f"divide by P_sym(1)^(n*ell) = ({Pq})^{G.n * ell} and take the floor",
    ]
    return ReductionPlan(G, ell, gadget, chained, stages, 2 * doubled_n, doubled_n, recipe)


def lift_matrix(plan: ReductionPlan) -> list:
    if "M" not in plan.matrices:
        D = double_graph(plan.chained)
        plan.matrices["M"] = bipartite_lift(D.adjacency()).symmetric_matrix()
    return plan.matrices["M"]


def alpha_max(M) -> float:
    lam = float(np.linalg.eigvalsh(np.array(M, dtype=float)).min())
    return 1.0 if lam >= 0 else 1.0 / abs(lam)


@dataclass
class Execution:
    route: str
    count: int
    nprime_multiset: Fraction
    nprime_sym: Fraction
    count_multiset: int
    count_sym: int
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "route": self.route,
            "count": self.count,
            "count_multiset": self.count_multiset,
            "count_sym": self.count_sym,
            "nprime_multiset": str(self.nprime_multiset),
            "nprime_sym": str(self.nprime_sym),
            "details": self.details,
        }


def execute_plan(plan: ReductionPlan, route: str = "flows", max_lift: int = 48) -> Execution:
    """Run the plan and recover the cycle-cover count.

    ``"matrix"`` materialises ``M``, evaluates exact pairing sums of the pencil
    at rational nodes and interpolates; feasible for small ``ell`` only.
    ``"permanent"`` skips the interpolation and takes ``per(adj D(G'))`` by a
    banded sparse DP, which reaches the full chain length for tiny graphs.
    ``"flows"`` evaluates the same double-cover counts by factoring over flows
    of the original graph with the gadget's measured profile; it scales to any
    ``ell``.  Every route reports the multiset and sym recoveries.
    """
    G, ell, gadget = plan.graph, plan.ell, plan.gadget
    n = G.n
    details: dict = {}
    if route == "flows":
        nm = flow_sum(G, chain_factors(gadget, ell, "multiset"), "multiset")
        ns = flow_sum(G, chain_factors(gadget, ell, "sym"), "sym")
    elif route == "matrix":
        if plan.lift_size > max_lift:
            raise ResourceLimitError(f"lift size {plan.lift_size} exceeds {max_lift}")
        M = lift_matrix(plan)
        size = len(M)
        amax = alpha_max(M)
        a_q = Fraction(amax).limit_denominator(1000)
        if a_q > amax:
            a_q = Fraction(math.floor(amax * 1000), 1000)
        D = size // 2
        nodes = interpolation_nodes(D + 1, a_q)
        values = []
        for a in nodes:
            Aa = [[(1 if (i // 2 == j // 2) else 0) + a * M[i][j] for j in range(size)] for i in range(size)]
            values.append(pairing_sum(Aa, max_size=size))
        lead = leading_coefficient(nodes, values)
        ns = lead / Fraction(4) ** plan.chained.n
        nm = count_double_cycle_covers(plan.chained, max_vertices=max(DOUBLE_COVER_GUARD, plan.chained.n))
        details = {"nodes": len(nodes), "alpha_max": amax, "leading_coefficient": str(lead)}
    elif route == "permanent":
        per = permanent_route(plan)
        ns = per / Fraction(4) ** plan.chained.n
        nm = flow_sum(G, chain_factors(gadget, ell, "multiset"), "multiset")
        details = {"permanent": str(per), "multiset_from": "flows"}
    else:
        raise InvalidInputError(f"unknown route {route!r}")
    cm = recover_count(nm, ell, n, 4)
    cs = recover_count(ns, ell, n, gadget.sym_profile[1])
    return Execution(route, cs, nm, ns, cm, cs, details)


def permanent_route(plan: ReductionPlan) -> Fraction:
    """``per(adj D(G'))`` by a sparse row DP, without the interpolation step."""
    D = double_graph(plan.chained)
    return permanent_sparse(D.adjacency())


def all_digraphs(n: int):
    """Every 0/1-weighted digraph on ``n`` vertices with loops allowed."""
    arcs = [(u, v) for u in range(n) for v in range(n)]
    for mask in range(1 << len(arcs)):
        yield WeightedDigraph(n, tuple(arcs[i] + (1,) for i in range(len(arcs)) if mask >> i & 1))
