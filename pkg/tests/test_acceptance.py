"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -s`` to see the lines, or execute the
file directly.  Every criterion runs at full scale.
"""

import time

from qbu import verify as V

LINES = {}


def _criterion(num: int, title: str, checks, *, budget=None, elapsed=None, must=None):
    must = set(must) if must is not None else None
    failed = [c.name for c in checks if c.status == "fail" and (must is None or c.name in must)]
    over = budget is not None and elapsed > budget
    ok = not failed and not over
    detail = ", ".join(failed) if failed else ""
    if over:
        detail = (detail + "; " if detail else "") + f"over budget: {elapsed:.1f}s > {budget}s"
    timing = f" [{elapsed:.1f}s]" if elapsed is not None else ""
    line = f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {title}{timing}" + (f" -- {detail}" if detail else "")
    LINES[num] = line
    print(line)
    for c in checks:
        print(f"    {c.status:7s} {c.name}: measured={V.jsonable(c.measured)} {c.note}")
    return ok, line


def _timed(fn, *a, **kw):
    t0 = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t0


def test_criterion_01_basic_round():
    checks, dt = _timed(V.basic_round_checks, (2, 3, 4, 5))
    ok, line = _criterion(1, "basic-round likelihood is d^(-d^2) on every binarized state", checks)
    assert ok, line


def test_criterion_02_clause_constants():
    checks, _ = _timed(V.clause_constant_checks, (3, 4, 5))
    ok, line = _criterion(2, "clause overlaps {8/9, 2/9, 2/9} and update 32/(27 d^3)", checks)
    assert ok, line


def test_criterion_03_pnorm_oracles():
    t0 = time.perf_counter()
    checks = V.pnorm_mc_checks(50, 10**6, 0) + V.rho_avg_checks(30, 1)
    ok, line = _criterion(3, "p_norm exact vs Monte Carlo (50 x 1e6) and vs mean-state chain rule (30)",
                          checks, budget=600, elapsed=time.perf_counter() - t0)
    assert ok, line


def test_criterion_04_kernels():
    checks = V.pairing_checks(8) + V.ryser_checks(200, 2, 7)
    ok, line = _criterion(4, "pairing sums of all-ones matrices and Ryser vs brute force", checks)
    assert ok, line


def test_criterion_05_wick_constant():
    checks = V.wick_checks(10**6, 3)
    ok, line = _criterion(5, "Wick constant: pi at d=n=1, quadrature and Monte Carlo", checks)
    assert ok, line


def test_criterion_06_pairing_table():
    checks = V.pairing_table_checks(4)
    ok, line = _criterion(6, "pairing-formula / p_norm ratio table, reproducible to 1e-9", checks)
    assert ok, line


def test_criterion_07_graph_chain():
    t0 = time.perf_counter()
    checks = V.gadget_checks() + V.chain_end_to_end_checks(3) + V.doubling_checks(3)
    ok, line = _criterion(7, "graph chain end-to-end, gadget profile, doubling identity 2^|V|",
                          checks, budget=300, elapsed=time.perf_counter() - t0,
                          must={"gadget_profile", "chain_end_to_end", "doubling_identity_2^V"})
    assert ok, line


def test_criterion_08_extraction():
    checks = V.extraction_checks(50, 5, 1e-6, 8)
    ok, line = _criterion(8, "base permanent extraction from the doubled pencil, 50 matrices", checks)
    assert ok, line


def test_criterion_09_lemma_sweep():
    t0 = time.perf_counter()
    checks = V.lemma_checks((3, 4, 5), 10_000, 6)
    ok, line = _criterion(9, "lemma bounds: zero violations, 1e4 states per d in {3,4,5}",
                          checks, budget=300, elapsed=time.perf_counter() - t0)
    assert ok, line


def test_criterion_10_mle_separation():
    checks = V.separation_checks(256, 7)
    ok, line = _criterion(10, "MLE separation: single clause reaches log p, Fano stays below", checks)
    assert ok, line


def test_criterion_11_amplification():
    checks = V.amplify_checks((2, 3, 5))
    ok, line = _criterion(11, "amplification multiplies log-likelihoods and log p by reps", checks)
    assert ok, line


if __name__ == "__main__":
    import sys

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion")]
    bad = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            bad += 1
    print("\nacceptance summary")
    for k in sorted(LINES):
        print(LINES[k])
    sys.exit(1 if bad else 0)
