from fractions import Fraction

import pytest

from qbu import InvalidInputError, ResourceLimitError
from qbu.graphred import (
    WeightedDigraph,
    all_digraphs,
    attach_chains,
    bipartite_lift,
    chain_graph,
    chain_length,
    compile_dcc_to_qbu,
    count_cycle_covers,
    count_double_cycle_covers,
    default_gadget,
    desk_chain_length,
    double_graph,
    execute_plan,
    flow_bound_holds,
    gadget_profile,
    perfect_matching_count,
    recover_count,
)
from qbu.matchperm import permanent


def complete(n, loops=False):
    return WeightedDigraph(n, tuple((u, v, 1) for u in range(n) for v in range(n) if loops or u != v))


def test_cycle_covers_are_permanents():
    assert count_cycle_covers(complete(3)) == 2  # derangements of 3
    assert count_cycle_covers(complete(4, loops=True)) == 24
    assert count_cycle_covers(WeightedDigraph(2, ((0, 1, Fraction(1, 2)), (1, 0, 3)))) == Fraction(3, 2)


def test_cycle_cover_guard():
    with pytest.raises(ResourceLimitError):
        count_cycle_covers(complete(10))


def test_digraph_json():
    G = WeightedDigraph(2, ((0, 1, Fraction(2, 3)), (1, 1, 1)))
    assert WeightedDigraph.from_json(G.to_json()).edges == G.edges
    with pytest.raises(InvalidInputError):
        WeightedDigraph(2, ((0, 2, 1),))


def test_all_digraphs_counts():
    assert len(list(all_digraphs(1))) == 2
    assert len(list(all_digraphs(2))) == 16


def test_gadget_profile():
    g = default_gadget()
    assert g.profile.counts == (3, 4, 3)
    assert g.sym_profile.counts == (Fraction(3, 4), Fraction(3, 2), Fraction(3, 8))
    assert gadget_profile(g.graph, g.source, g.sink).counts == (3, 4, 3)


def test_two_links_multiply():
    ch, s, t = chain_graph(default_gadget(), 2)
    assert count_double_cycle_covers(ch, (s, t, 0), max_vertices=ch.n) == 9


def test_doubling_counterexample():
    # complete graph with loops on two vertices: per(adj D(G)) = 24 but the multiset count is 3
    G = complete(2, loops=True)
    assert permanent(double_graph(G).adjacency()) == 24
    assert count_double_cycle_covers(G) == 3
    assert count_double_cycle_covers(G, weighting="sym") * 16 == 24


def test_chain_lengths():
    assert chain_length(1) == 21
    assert [desk_chain_length(n) for n in (1, 2, 3)] == [20, 20, 25]


def test_flow_bound_equality_at_three():
    lhs, rhs, ok = flow_bound_holds(3)
    assert lhs == rhs == 1000 and not ok
    assert all(flow_bound_holds(n)[2] for n in (1, 2, 4, 5))


def test_recover_count():
    assert recover_count(Fraction(4) ** 6 * 2 + 5, 3, 2) == 2


def test_bipartite_lift_square():
    A = [[1, 2], [0, 3]]
    lift = bipartite_lift(A)
    assert perfect_matching_count(lift) == permanent(A)


@pytest.mark.parametrize("route", ["flows", "matrix"])
def test_end_to_end_ell1(route):
    G = WeightedDigraph(2, ((0, 1, 1), (1, 0, 1), (0, 0, 1)))
    ex = execute_plan(compile_dcc_to_qbu(G, ell=1), route)
    assert ex.count_sym == count_cycle_covers(G)


def test_end_to_end_two_vertices_desk_length():
    for G in all_digraphs(2):
        ex = execute_plan(compile_dcc_to_qbu(G))
        assert ex.count == ex.count_multiset == count_cycle_covers(G)


def test_attach_chains_size():
    G = complete(2)
    g = default_gadget()
    # each chain's two terminals merge into the vertex it hangs from
    assert attach_chains(G, g, 3).n == 2 + 2 * (chain_graph(g, 3)[0].n - 2)


def test_compile_guard():
    with pytest.raises(ResourceLimitError):
        compile_dcc_to_qbu(complete(5))
