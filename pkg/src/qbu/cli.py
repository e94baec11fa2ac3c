"""Command-line front end.

    qbu compile sat-mle --in f.json --C 2 --out inst.json
    qbu eval pnorm --method exact --in inst.json
    qbu verify constants

Exit codes: 0 success / all checks pass, 1 a check failed, 2 bad input,
3 a resource guard or conditioning limit was hit.  Reports are JSON with
sorted keys; apart from ``wall_time`` they depend only on the command line
and the input file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import ConditioningError, InvalidInputError, QBUError, ResourceLimitError
from .estimators import maximize_likelihood, posterior_density, rho_avg
from .graphred import WeightedDigraph, compile_dcc_to_qbu, execute_plan
from .hilbert import ObservationSet, PureState
from .matchperm import pnorm_via_pairings
from .satcompile import Mnae3SatInstance, compile_mle, compile_qbu
from .sphere import pnorm_exact, pnorm_montecarlo
from .verify import SUITES, Check, jsonable, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# files and hashing


def _read_input(path):
    if path is None:
        raise CliError(EXIT_INPUT, "--in is required")
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CliError(EXIT_INPUT, f"{path} is not valid JSON: {exc}") from None
    return data, hashlib.sha256(raw).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def _write(path, obj):
    text = _dumps(obj) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot write {path}: {exc.strerror}") from None


def _config_hash(args, input_sha) -> str:
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "threads")}
    payload = json.dumps({"options": jsonable(opts), "input_sha256": input_sha}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def _observations(data) -> tuple:
    """Observation set from a bare set or a compiled SAT instance, plus the instance record."""
    if not isinstance(data, dict):
        raise InvalidInputError("expected a JSON object")
    kind = data.get("kind")
    if kind == "graph-qbu":
        raise InvalidInputError("graph plans carry no observation set; use compile graph-qbu --route")
    if "observations" in data:
        return ObservationSet.from_json(data["observations"]), data
    return ObservationSet.from_json(data), None


def _float(x) -> float | str:
    x = float(x)
    return x if math.isfinite(x) else str(x)


# ---------------------------------------------------------------------------
# compile


def cmd_compile(args) -> tuple:
    data, sha = _read_input(args.input)
    if args.target in ("sat-mle", "sat-qbu"):
        inst = Mnae3SatInstance.from_json(data)
        if args.target == "sat-mle":
            C = Fraction(args.C) if args.C is not None else 2
            compiled = compile_mle(inst, C)
        else:
            compiled = compile_qbu(inst, args.K1, args.K2)
        record = compiled.to_json()
        summary = {
            "kind": record["kind"],
            "d": inst.d,
            "clauses": inst.k,
            "K1": compiled.K1,
            "K2": compiled.K2,
            "n_observations": compiled.observations.n,
            "log_p": {"value": compiled.log_p, "convention": "natural log", "tolerance": 0},
        }
    else:
        try:
            G = WeightedDigraph.from_json(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed graph: {exc}") from None
        plan = compile_dcc_to_qbu(G, ell=args.ell)
        record = {"kind": "graph-qbu", **plan.to_json()}
        summary = {"kind": "graph-qbu", "vertices": G.n, "ell": plan.ell, "lift_size": plan.lift_size}
        if args.route:
            ex = execute_plan(plan, route=args.route)
            record["execution"] = ex.to_json()
            summary["count"] = {"value": ex.count, "convention": "cycle covers", "tolerance": 0}
    if args.out is None:
        raise CliError(EXIT_INPUT, "compile needs --out")
    _write(args.out, record)
    summary["written"] = args.out
    return sha, summary, []


# ---------------------------------------------------------------------------
# eval


def _load_state(path, d):
    data, _ = _read_input(path)
    if isinstance(data, dict):
        re = data.get("re")
        im = data.get("im", [0] * len(re or []))
    else:
        re, im = data, [0] * len(data)
    if re is None or len(re) != len(im):
        raise InvalidInputError("state needs matching 're' and 'im' lists")
    vals = [complex(a, b) if b else a for a, b in zip(re, im)]
    psi = PureState.from_vector(vals)
    if psi.d != d:
        raise InvalidInputError(f"state dimension {psi.d} != {d}")
    return psi


def _eval_pnorm(args, obs):
    if args.method == "exact":
        p = pnorm_exact(obs)
        out = {"method": "exact", "convention": args.convention, "tolerance": 0,
               "value": _float(p.value(args.convention))}
        if p.exact_normalized is not None:
            if args.convention == "normalized":
                out["exact"] = str(p.exact_normalized)
            else:
                raw = p.exact_raw
                out["exact"] = f"({raw.coef}) * pi^{raw.pi_power}"
        return out
    if args.method == "mc":
        if args.convention != "normalized":
            raise InvalidInputError("Monte Carlo estimates use the normalized convention")
        mean, err = pnorm_montecarlo(obs, args.samples, args.seed)
        return {"method": "mc", "convention": "normalized", "value": mean, "stderr": err,
                "tolerance": "1 stderr", "samples": args.samples, "seed": args.seed}
    if args.convention != "raw":
        raise InvalidInputError("the pairing formula is on the raw surface-integral scale; pass --convention raw")
    if not obs.rank_one:
        raise InvalidInputError("the pairing formula needs rank-one observations")
    return {"method": "pairings", "convention": "raw", "value": _float(pnorm_via_pairings(obs)),
            "tolerance": "float rounding",
            "note": "pairing-formula value; its relation to p_norm is measured, not assumed"}


def cmd_eval(args) -> tuple:
    data, sha = _read_input(args.input)
    obs, compiled = _observations(data)
    if args.quantity == "pnorm":
        result = _eval_pnorm(args, obs)
    elif args.quantity == "rho":
        rho = rho_avg(obs)
        result = {"method": "exact", "convention": "trace one", "tolerance": 0 if rho.exact else 1e-9,
                  "re": rho.matrix.real.tolist(), "im": rho.matrix.imag.tolist(), "trace": rho.trace}
        if rho.exact is not None:
            result["exact_re"] = [[str(x) for x in row] for row in rho.exact[0]]
            result["exact_im"] = [[str(x) for x in row] for row in rho.exact[1]]
    elif args.quantity == "posterior":
        if args.state is None:
            raise InvalidInputError("posterior needs --state")
        psi = _load_state(args.state, obs.d)
        result = {"method": "exact", "convention": "density w.r.t. Haar probability", "tolerance": 1e-12,
                  "value": _float(posterior_density(obs, psi))}
    else:
        psi, ll = maximize_likelihood(obs, restarts=args.restarts, seed=args.seed)
        result = {"method": "multistart ascent", "convention": "natural log", "tolerance": "lower bound",
                  "loglik": _float(ll), "restarts": args.restarts, "seed": args.seed,
                  "state_re": psi.vector.real.tolist(), "state_im": psi.vector.imag.tolist()}
        if compiled is not None and "log_p" in compiled:
            result["log_p"] = compiled["log_p"]
            result["margin"] = _float(ll - compiled["log_p"])
    result["d"], result["n"] = obs.d, obs.n
    return sha, result, []


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> tuple:
    name = args.suite_pos or args.suite
    if name is None:
        raise CliError(EXIT_INPUT, f"choose a suite from {sorted(SUITES)}")
    opts = {"seed": args.seed, "samples": args.samples, "restarts": args.restarts, "quick": args.quick}
    if args.d is not None:
        opts["d"] = args.d
    if args.seed is None:
        opts.pop("seed")
    checks: list[Check] = run_suite(name, **opts)
    return None, {"suite": name}, checks


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qbu", description="Exact Bayesian updating over pure states")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the JSON report here (default stdout)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1,
                        help="worker cap; recorded in the report, the library runs in one process")

    c = sub.add_parser("compile", help="compile a SAT instance or a digraph")
    c.add_argument("target", choices=["sat-mle", "sat-qbu", "graph-qbu"])
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--C", default=None, help="MLE gap, a number > 1 (default 2)")
    c.add_argument("--K1", type=int, default=None)
    c.add_argument("--K2", type=int, default=None)
    c.add_argument("--ell", type=int, default=None, help="chain length (default: desk length)")
    c.add_argument("--route", choices=["flows", "matrix", "permanent"], default=None,
                   help="also execute the graph plan and recover the count")
    common(c)
    c.set_defaults(func=cmd_compile)

    e = sub.add_parser("eval", help="evaluate p_norm or an estimator on an observation set")
    e.add_argument("quantity", choices=["pnorm", "rho", "posterior", "mle"])
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--method", choices=["exact", "mc", "pairings"], default="exact")
    e.add_argument("--convention", choices=["raw", "normalized"], default="normalized")
    e.add_argument("--samples", type=int, default=10**6)
    e.add_argument("--restarts", type=int, default=16)
    e.add_argument("--state", default=None, help="JSON state {'re': [...], 'im': [...]} for posterior")
    common(e)
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite_pos", nargs="?", choices=sorted(SUITES), metavar="SUITE")
    v.add_argument("--suite", choices=sorted(SUITES), default=None)
    v.add_argument("--samples", type=int, default=None)
    v.add_argument("--restarts", type=int, default=None)
    v.add_argument("--d", type=int, nargs="+", default=None)
    v.add_argument("--quick", action="store_true", help="smaller sample counts for the oracle suite")
    common(v)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    if args.command == "eval" and args.seed is None:
        args.seed = 0
    start = time.perf_counter()
    report = {"command": ["qbu", *argv], "version": __version__}
    code = EXIT_OK
    try:
        sha, result, checks = args.func(args)
    except CliError as exc:
        code, message = exc.code, str(exc)
    except ResourceLimitError as exc:
        code, message = EXIT_RESOURCE, f"resource guard: {exc}"
    except ConditioningError as exc:
        code, message = EXIT_RESOURCE, f"conditioning limit: {exc}"
    except (InvalidInputError, ValueError) as exc:
        code, message = EXIT_INPUT, f"invalid input: {exc}"
    except QBUError as exc:
        code, message = EXIT_INPUT, str(exc)
    else:
        message = None
    if code != EXIT_OK:
        print(f"qbu: {message}", file=sys.stderr)
        report.update({"error": message, "exit_code": code, "checks": [],
                       "wall_time": time.perf_counter() - start})
        try:
            if args.command != "compile":
                _write(args.out, report)
        except CliError:
            pass
        return code
    report["config_hash"] = _config_hash(args, sha)
    report["input_sha256"] = sha
    report["threads"] = args.threads
    report["result"] = result
    report["checks"] = [c.to_json() for c in checks]
    if any(c.status == "fail" for c in checks):
        code = EXIT_FAIL
    report["exit_code"] = code
    report["wall_time"] = time.perf_counter() - start
    # compile writes the instance to --out; its report goes to stdout
    _write(None if args.command == "compile" else args.out, report)
    return code


if __name__ == "__main__":
    sys.exit(main())
