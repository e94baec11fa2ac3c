import math
from fractions import Fraction

import pytest

from qbu import InvalidInputError, LogExact, b0_state
from qbu.exact import squared_overlap, to_gauss_vector
from qbu.hilbert import likelihood_exact
from qbu.satcompile import (
    Mnae3SatInstance,
    amplify,
    clause_update,
    clause_vectors,
    compile_mle,
    compile_qbu,
    enumerate_b0,
    fano_instance,
    mle_constants,
    nae_eval,
    qbu_constants,
    verify_lemma_bounds,
)


def test_clause_update_values():
    assert clause_update(3) == Fraction(32, 729)
    assert clause_update(4) == Fraction(32, 27 * 64)


def test_clause_vectors_orthogonal_to_all_equal():
    for v in clause_vectors((1, 2, 3), 4):
        assert sum(v) == 0


def test_nae_overlaps():
    vecs = [to_gauss_vector(v) for v in clause_vectors((1, 2, 3), 3)]
    b = to_gauss_vector([1, 1, -1])
    got = sorted(squared_overlap(v, b) for v in vecs)
    assert got == [Fraction(2, 9), Fraction(2, 9), Fraction(8, 9)]


def test_instance_validation():
    with pytest.raises(InvalidInputError):
        Mnae3SatInstance(3, ((1, 2, 2),))
    with pytest.raises(InvalidInputError):
        Mnae3SatInstance(3, ((1, 2, 4),))
    with pytest.raises(InvalidInputError):
        Mnae3SatInstance(3, ((1, 2),))
    with pytest.raises(InvalidInputError):
        compile_mle(Mnae3SatInstance(2, ()))
    with pytest.raises(InvalidInputError):
        compile_mle(Mnae3SatInstance(3, ((1, 2, 3),)), C=1)


def test_nae_eval():
    inst = Mnae3SatInstance(3, ((1, 2, 3),))
    assert nae_eval((1, -1, 1), inst)[0]
    assert not nae_eval((1, 1, 1), inst)[0]


def test_fano_is_unsatisfiable():
    inst = fano_instance()
    assert inst.d == 7 and inst.k == 7
    from itertools import product

    assert not any(nae_eval(s, inst)[0] for s in product((1, -1), repeat=7))


def test_constants():
    assert mle_constants(3, 2) == (math.ceil(1200 * 243 * math.log(2)), 1)
    K1, K2, eps = qbu_constants(3)
    assert K1 == math.ceil(1200 * 3**7 * math.log(3))
    assert K2 == 6
    assert eps == Fraction(1, 2400 * 3**9 * 4)


def test_qbu_override_flag():
    inst = Mnae3SatInstance(3, ((1, 2, 3),))
    assert not compile_qbu(inst).overridden
    small = compile_qbu(inst, K1=2, K2=1)
    assert small.overridden and small.K1 == 2


def test_single_clause_b0():
    comp = compile_mle(Mnae3SatInstance(3, ((1, 2, 3),)))
    rows = enumerate_b0(comp)
    assert len(rows) == 4
    good = [r for r in rows if r.likelihood == comp.p]
    assert len(good) == 3 and all(r.good for r in good)
    assert sum(r.likelihood.is_zero for r in rows) == 1


def test_threshold_is_solution_likelihood():
    inst = Mnae3SatInstance(4, ((1, 2, 3), (2, 3, 4)))
    comp = compile_mle(inst)
    assert likelihood_exact(b0_state((1, -1, 1, -1)), comp.observations) == comp.p


@pytest.mark.parametrize("reps", [2, 3])
def test_amplify(reps):
    comp = compile_mle(Mnae3SatInstance(3, ((1, 2, 3),)))
    amp = amplify(comp, reps)
    assert amp.p == comp.p**reps
    assert amp.log_p == pytest.approx(reps * comp.log_p)
    assert amp.observations.n == reps * comp.observations.n
    with pytest.raises(InvalidInputError):
        amplify(comp, 0)


def test_instance_json():
    inst = fano_instance()
    assert Mnae3SatInstance.from_json(inst.to_json()) == inst
    with pytest.raises(InvalidInputError):
        Mnae3SatInstance.from_json({"clauses": []})


def test_lemma_sweep_small():
    rep = verify_lemma_bounds(3, samples=1000, seed=1)
    assert rep.ok and not rep.violations
