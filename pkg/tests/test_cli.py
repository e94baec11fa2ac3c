import json

import pytest

from qbu import basic_observation_set
from qbu.cli import main


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def report(capsys):
    return json.loads(capsys.readouterr().out)


def test_compile_sat_mle(tmp_path, capsys):
    src = write(tmp_path / "f.json", {"d": 3, "clauses": [[1, 2, 3]]})
    out = tmp_path / "inst.json"
    assert main(["compile", "sat-mle", "--in", src, "--C", "2", "--out", str(out)]) == 0
    rep = report(capsys)
    assert rep["result"]["K2"] == 1
    inst = json.loads(out.read_text())
    assert inst["kind"] == "sat-mle" and inst["observations"]["d"] == 3


def test_compile_rejects_bad_clause(tmp_path, capsys):
    src = write(tmp_path / "f.json", {"d": 3, "clauses": [[1, 1, 2]]})
    assert main(["compile", "sat-mle", "--in", src, "--out", str(tmp_path / "x.json")]) == 2
    assert "distinct" in capsys.readouterr().err


def test_compile_rejects_small_d(tmp_path):
    src = write(tmp_path / "f.json", {"d": 2, "clauses": []})
    assert main(["compile", "sat-qbu", "--in", src, "--out", str(tmp_path / "x.json")]) == 2


def test_missing_and_malformed_files(tmp_path):
    assert main(["eval", "pnorm", "--in", str(tmp_path / "nope.json")]) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["eval", "pnorm", "--in", str(tmp_path / "bad.json")]) == 2


def test_compile_graph_with_route(tmp_path, capsys):
    src = write(tmp_path / "g.json", {"n": 2, "edges": [[0, 1, "1"], [1, 0, "1"], [0, 0, "1"]]})
    out = tmp_path / "plan.json"
    assert main(["compile", "graph-qbu", "--in", src, "--route", "flows", "--out", str(out)]) == 0
    assert report(capsys)["result"]["count"]["value"] == 1
    assert json.loads(out.read_text())["execution"]["count"] == 1


def test_eval_pnorm_exact(tmp_path, capsys):
    src = write(tmp_path / "o.json", basic_observation_set(2).to_json())
    assert main(["eval", "pnorm", "--in", src]) == 0
    res = report(capsys)["result"]
    assert res["exact"] == "1/40" and res["convention"] == "normalized"


def test_eval_mc_reproducible(tmp_path, capsys):
    src = write(tmp_path / "o.json", basic_observation_set(2).to_json())
    args = ["eval", "pnorm", "--method", "mc", "--samples", "5000", "--seed", "7", "--in", src]
    main(args)
    a = report(capsys)
    main(args)
    b = report(capsys)
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b and a["result"]["stderr"] > 0


def test_eval_pairings_needs_raw(tmp_path):
    src = write(tmp_path / "o.json", basic_observation_set(2).to_json())
    assert main(["eval", "pnorm", "--method", "pairings", "--in", src]) == 2
    assert main(["eval", "pnorm", "--method", "pairings", "--convention", "raw", "--in", src]) == 0


def test_eval_guard_exit_3(tmp_path, capsys):
    src = write(tmp_path / "o.json", basic_observation_set(3, mult=10).to_json())
    assert main(["eval", "pnorm", "--in", src]) == 3


def test_eval_rho_and_posterior(tmp_path, capsys):
    src = write(tmp_path / "o.json", basic_observation_set(2).to_json())
    assert main(["eval", "rho", "--in", src]) == 0
    assert report(capsys)["result"]["exact_re"][0][0] == "1/2"
    st = write(tmp_path / "s.json", {"re": [1, 1]})
    assert main(["eval", "posterior", "--in", src, "--state", st]) == 0
    assert report(capsys)["result"]["value"] == pytest.approx(2.5)


def test_eval_mle_on_compiled(tmp_path, capsys):
    src = write(tmp_path / "f.json", {"d": 3, "clauses": [[1, 2, 3]]})
    inst = tmp_path / "inst.json"
    main(["compile", "sat-mle", "--in", src, "--out", str(inst)])
    capsys.readouterr()
    assert main(["eval", "mle", "--restarts", "8", "--seed", "1", "--in", str(inst)]) == 0
    assert report(capsys)["result"]["margin"] >= -1e-6


def test_verify_deterministic(tmp_path):
    out = tmp_path / "r.json"
    reps = []
    for _ in range(2):
        assert main(["verify", "constants", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        rep.pop("wall_time")
        reps.append(rep)
    assert reps[0] == reps[1]
    assert all(c["status"] in ("pass", "fail", "skipped") for c in reps[0]["checks"])
    assert len(reps[0]["config_hash"]) == 64


def test_verify_lemmas_flags(capsys):
    # the suite carries the distance-chain check, which fails, so the exit code is 1
    assert main(["verify", "--suite", "lemmas", "--d", "3", "--samples", "2000"]) == 1
    status = {c["name"]: c["status"] for c in report(capsys)["checks"]}
    assert status["lemma_sweep_d3"] == "pass" and "lemma_sweep_d4" not in status
    assert status["distance_chain_claim"] == "fail"
