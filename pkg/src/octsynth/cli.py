"""Batch command line: synthesize, verify, sweep, lemmas, certificate.

Exit codes: 0 success or PASS, 1 verification FAIL, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from typing import Sequence

from .core import ProblemParams, ValidationError, derive_constants, sample
from .cost import GapKind, delta_inequalities, lemma_gap
from .oracle import GridSpec, compare, dp_solve
from .pmp import Unsupported, build_certificate, check_certificate, from_json, to_json
from .synthesis import CandidateSet, synthesize

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# canonical output


def _fmt(x: float) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        return json.dumps(None)
    return format(float(x), ".17g")


def _canon(obj) -> str:
    """JSON with sorted keys and floats at 17 significant digits."""
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_canon(obj[k])}" for k in sorted(obj))
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    return json.dumps(str(obj))


def dumps(obj) -> str:
    return _canon(obj) + "\n"


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# documents


def _params_doc(p: ProblemParams) -> dict:
    return {"a": p.a, "lambda": p.lam, "t0": p.t0, "T": p.T, "x0": p.x0}


def candidate_set_doc(params: ProblemParams, cs: CandidateSet) -> dict:
    cands = []
    for c in cs:
        traj = c.trajectory
        cands.append(
            {
                "breakpoints": [[t, x] for t, x in zip(traj.times, traj.states)],
                "control": [
                    {"t_lo": lo, "t_hi": hi, "u": s.control} for lo, hi, _, _, s in traj.segments()
                ],
                "cost": c.cost,
                "shape": c.shape.kind.value,
                "status": c.status.value,
            }
        )
    return {
        "candidates": cands,
        "params": _params_doc(params),
        "regime": {"clause": cs.label.clause, "theorem": cs.label.theorem.value},
    }


# --------------------------------------------------------------------------
# commands


def _params(args) -> ProblemParams:
    return ProblemParams(args.a, args.lam, args.t0, args.T, args.x0)


def _grid(args) -> GridSpec:
    controls = tuple(float(v) for v in args.controls.split(",")) if args.controls else None
    if controls is None:
        return GridSpec(args.nt, args.nx)
    return GridSpec(args.nt, args.nx, controls)


def cmd_synthesize(args) -> int:
    params = _params(args)
    cs = synthesize(params, forms=args.forms)
    if args.format == "csv":
        rows = []
        for i, c in enumerate(cs):
            rows.extend((i, t, x, u) for t, x, u in sample(c.trajectory, args.samples))
        _emit(_csv(["candidate", "t", "x", "u"], rows), args.out)
    else:
        _emit(dumps(candidate_set_doc(params, cs)), args.out)
    return EXIT_OK


def _certificate_docs(params: ProblemParams, cs: CandidateSet, tol: float) -> list[dict]:
    docs = []
    for c in cs:
        mult = build_certificate(params, c)
        if isinstance(mult, Unsupported):
            docs.append({"certificate": "unsupported", "reason": mult.reason})
            continue
        rep = check_certificate(params, c, mult, tol)
        docs.append(
            {
                "certificate": "pass" if rep.passed else "fail",
                "failures": rep.failures(),
                "residuals": rep.residuals,
            }
        )
    return docs


def cmd_verify(args) -> int:
    params = _params(args)
    cs = synthesize(params, forms=args.forms)
    oracle = dp_solve(params, _grid(args))
    verdict = compare(params, cs, oracle, args.tol)
    certs = _certificate_docs(params, cs, args.cert_tol)
    # the cheapest candidate must not fail its certificate; unsupported is only noted
    cert_ok = certs[0]["certificate"] != "fail"
    passed = verdict.passed and cert_ok
    doc = {
        "certificates": certs,
        "oracle": {
            "candidate_value": verdict.candidate_value,
            "gap": verdict.gap,
            "grid": {"controls": list(oracle_controls(args)), "n_t": args.nt, "n_x": args.nx},
            "oracle_value": verdict.oracle_value,
            "pass": verdict.passed,
            "pruned": oracle.diagnostics["pruned"],
            "tol": verdict.tol,
        },
        "params": _params_doc(params),
        "regime": {"clause": cs.label.clause, "theorem": cs.label.theorem.value},
        "verdict": "PASS" if passed else "FAIL",
    }
    _emit(dumps(doc), args.out)
    return EXIT_OK if passed else EXIT_FAIL


def oracle_controls(args) -> tuple[float, ...]:
    return _grid(args).controls


SWEEP_HEADER = ["horizon", "theorem", "clause", "n_candidates", "best_cost", "second_cost", "switch_times"]


def sweep_rows(args) -> list[list]:
    lo, hi, steps = args.horizon_min, args.horizon_max, args.steps
    if steps is None or steps < 2:
        raise UsageError("--steps must be at least 2")
    if lo is None or hi is None or not 0.0 < lo < hi:
        raise UsageError("need 0 < --horizon-min < --horizon-max")
    rows = []
    for k in range(steps):
        h = lo + (hi - lo) * k / (steps - 1)
        if k == steps - 1:
            h = hi
        params = ProblemParams(args.a, args.lam, args.t0, args.t0 + h, args.x0)
        cs = synthesize(params, forms=args.forms)
        second = cs[1].cost if len(cs) > 1 else ""
        switches = ";".join(_fmt(t) for t in cs.best.trajectory.switch_times())
        rows.append([h, cs.label.theorem.value, cs.label.clause, len(cs), cs.best.cost, second, switches])
    return rows


def cmd_sweep(args) -> int:
    rows = sweep_rows(args)
    if args.format == "json":
        docs = [dict(zip(SWEEP_HEADER, r)) for r in rows]
        _emit(dumps({"rows": docs}), args.out)
    else:
        _emit(_csv(SWEEP_HEADER, rows), args.out)
    return EXIT_OK


def lemma_trials(trials: int, seed: int) -> dict:
    """Seeded run of the gap identities and the two Delta inequalities."""
    rng = random.Random(seed)
    worst = 0.0
    id_pass = id_total = ineq_pass = 0
    for _ in range(trials):
        a = rng.uniform(0.5, 4.0)
        lam = rng.uniform(0.05, 0.95) * a
        t1 = rng.uniform(0.0, 5.0)
        length = rng.uniform(1e-3, 1.0) * 4.0 / a
        t2 = t1 + length
        xi = rng.uniform(-1.0 + 0.5 * a * length, 1.0) if length <= 2.0 / a else None
        params = ProblemParams(a, lam, 0.0, t2 + 1.0, 0.0)
        kinds = [GapKind.UPPER_BOUNDARY_VEE, GapKind.LOWER_BOUNDARY_TENT]
        if xi is not None:
            kinds.append(GapKind.LEVEL_VEE)
        for kind in kinds:
            lhs, rhs = lemma_gap(params, t1, t2, kind, xi)
            res = abs(lhs - rhs)
            worst = max(worst, res)
            sign_ok = lhs < 0 if kind is GapKind.LOWER_BOUNDARY_TENT else lhs > 0
            id_total += 1
            id_pass += res <= 1e-12 and sign_ok
        eps = rng.uniform(0.01, 0.99) * length
        ineq_pass += delta_inequalities(lam, t1, t2, eps).ok
    return {
        "identity_pass": id_pass,
        "identity_total": id_total,
        "inequality_pass": ineq_pass,
        "inequality_total": trials,
        "max_identity_residual": worst,
        "seed": seed,
        "trials": trials,
    }


def cmd_lemmas(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    r = lemma_trials(args.trials, args.seed)
    ok = r["identity_pass"] == r["identity_total"] and r["inequality_pass"] == r["inequality_total"]
    line = (
        f"lemmas trials={r['trials']} seed={r['seed']} "
        f"identities={r['identity_pass']}/{r['identity_total']} "
        f"max_residual={r['max_identity_residual']:.3e} "
        f"inequalities={r['inequality_pass']}/{r['inequality_total']} "
        f"status={'PASS' if ok else 'FAIL'}\n"
    )
    _emit(line, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_certificate(args) -> int:
    params = _params(args)
    cs = synthesize(params, forms=args.forms)
    if not 0 <= args.candidate < len(cs):
        raise UsageError(f"--candidate must be in [0, {len(cs) - 1}]")
    cand = cs[args.candidate]
    if args.check:
        try:
            with open(args.check, encoding="utf-8") as fh:
                mult = from_json(json.load(fh))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot read certificate {args.check}: {exc}") from exc
        rep = check_certificate(params, cand, mult, args.cert_tol, derivative="fd")
        doc = {"failures": rep.failures(), "pass": rep.passed, "residuals": rep.residuals}
        _emit(dumps(doc), args.out)
        return EXIT_OK if rep.passed else EXIT_FAIL
    mult = build_certificate(params, cand)
    if isinstance(mult, Unsupported):
        _emit(dumps({"certificate": "unsupported", "reason": mult.reason}), args.out)
        return EXIT_FAIL
    _emit(dumps(to_json(mult)), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_params(p: argparse.ArgumentParser, *, need_T: bool = True) -> None:
    p.add_argument("--a", type=float, required=True, help="control gain, a > lambda")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="discount rate, 0 < lambda < a")
    p.add_argument("--t0", type=float, default=0.0, help="initial time (default 0)")
    if need_T:
        p.add_argument("--T", type=float, required=True, help="final time, T > t0")
    p.add_argument("--x0", type=float, required=True, help="initial state in [-1, 1]")
    p.add_argument("--forms", choices=("repaired", "paper"), default="repaired", help="form table (default repaired)")
    p.add_argument("--out", default=None, help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="octsynth", allow_abbrev=False, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", allow_abbrev=False, help="candidate set of the classified clause")
    _add_params(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--samples", type=int, default=101, help="uniform CSV samples per candidate")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", allow_abbrev=False, help="oracle comparison plus certificates")
    _add_params(p)
    p.add_argument("--nt", type=int, default=4000, help="DP time steps")
    p.add_argument("--nx", type=int, default=2001, help="DP state nodes (odd)")
    p.add_argument("--controls", default=None, help="comma-separated control values")
    p.add_argument("--tol", type=float, default=5e-3, help="two-sided oracle tolerance")
    p.add_argument("--cert-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", allow_abbrev=False, help="regime atlas over the horizon")
    _add_params(p, need_T=False)
    p.add_argument("--horizon-min", type=float, required=True)
    p.add_argument("--horizon-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=50, help="number of horizons, at least 2")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lemmas", allow_abbrev=False, help="seeded run of the gap identities")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write to this file instead of stdout")
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("certificate", allow_abbrev=False, help="emit or check a multiplier document")
    _add_params(p)
    p.add_argument("--candidate", type=int, default=0, help="candidate index, cheapest first")
    p.add_argument("--check", default=None, metavar="PATH", help="check this certificate file instead of emitting one")
    p.add_argument("--cert-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_certificate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (ValidationError, UsageError) as exc:
        print(f"octsynth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
