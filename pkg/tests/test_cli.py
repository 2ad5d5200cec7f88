"""CLI contract: goldens, determinism, exit codes.

Regenerate the golden files after an intended output change with
``python3 tests/test_cli.py --regen``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

from octsynth.cli import dumps, main

GOLDEN = Path(__file__).parent / "golden"

# one pinned instance per theorem: name, a, lambda, t0, T, x0, expected label
PINNED = [
    ("thm3a", 1.0, 0.9, 0.0, 4.5, 0.0, "Thm3a/c"),
    ("thm3b", 2.0, 1.0, 0.0, 1.6, -1.0, "Thm3b/b"),
    ("thm3c1", 0.5, 0.1, 0.0, 9.0, 0.2, "Thm3c1/g"),
    ("thm3c2", 2.0, 1.0, 0.0, 0.8, 0.6931471805599453, "Thm3c2/b"),
    ("thm3c3", 2.0, 1.0, 0.5, 5.5, 1.0, "Thm3c3/g"),
    ("thm3d", 2.0, 1.0, 0.0, 3.0, 0.0, "Thm3d/f"),
]


def param_flags(a, lam, t0, T, x0, with_T=True):
    flags = ["--a", repr(a), "--lambda", repr(lam), "--t0", repr(t0), "--x0", repr(x0)]
    return flags + (["--T", repr(T)] if with_T else [])


def commands(row):
    name, a, lam, t0, T, x0, _ = row
    synth = ["synthesize", *param_flags(a, lam, t0, T, x0)]
    sweep = ["sweep", *param_flags(a, lam, t0, T, x0, with_T=False), "--horizon-min", "0.05", "--horizon-max", repr(6.0 / a), "--steps", "25"]
    return {
        f"{name}_synthesize.json": synth,
        f"{name}_synthesize.csv": synth + ["--format", "csv", "--samples", "11"],
        f"{name}_sweep.csv": sweep,
        f"{name}_sweep.json": sweep + ["--format", "json"],
    }


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


CASES = [(fname, argv) for row in PINNED for fname, argv in commands(row).items()]


@pytest.mark.parametrize("fname, argv", CASES, ids=[c[0] for c in CASES])
def test_golden_outputs(fname, argv, capsys):
    code, out, _ = run(argv, capsys)
    assert code == 0
    assert out == (GOLDEN / fname).read_text(encoding="utf-8")
    code2, out2, _ = run(argv, capsys)
    assert (code2, out2) == (code, out)


@pytest.mark.parametrize("row", PINNED, ids=[r[0] for r in PINNED])
def test_pinned_labels(row, capsys):
    code, out, _ = run(commands(row)[f"{row[0]}_synthesize.json"], capsys)
    doc = json.loads(out)
    assert f"{doc['regime']['theorem']}/{doc['regime']['clause']}" == row[-1]


def test_json_round_trip(capsys):
    for row in PINNED:
        _, out, _ = run(commands(row)[f"{row[0]}_synthesize.json"], capsys)
        assert dumps(json.loads(out)) == out


def test_two_candidate_document(capsys):
    code, out, _ = run(["synthesize", "--a", "2", "--lambda", "1", "--t0", "0", "--T", "1.6", "--x0", "-1"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["candidates"]) == 2
    assert set(doc["candidates"][0]) == {"breakpoints", "control", "cost", "shape", "status"}


def test_csv_has_header_and_rows(capsys):
    _, out, _ = run(["synthesize", "--a", "1", "--lambda", "0.9", "--T", "0.5", "--x0", "0", "--format", "csv", "--samples", "100"], capsys)
    lines = out.splitlines()
    assert lines[0] == "candidate,t,x,u" and len(lines) == 101


def test_invalid_start_exit_code(capsys):
    code, _, err = run(["synthesize", "--a", "2", "--lambda", "1", "--T", "1", "--x0", "1.5"], capsys)
    assert code == 2 and "x0 must lie in [-1,1]" in err


def test_usage_errors_exit_two(capsys):
    assert run(["bogus"], capsys)[0] == 2
    assert run(["synthesize", "--a", "2"], capsys)[0] == 2
    assert run(["synthesize", "--a", "2", "--lam", "1", "--T", "1", "--x0", "0"], capsys)[0] == 2
    sweep = ["sweep", "--a", "2", "--lambda", "1", "--x0", "0"]
    assert run(sweep + ["--horizon-min", "2", "--horizon-max", "1", "--steps", "4"], capsys)[0] == 2
    assert run(sweep + ["--horizon-min", "1", "--horizon-max", "2", "--steps", "1"], capsys)[0] == 2
    assert run(["lemmas", "--trials", "0"], capsys)[0] == 2
    assert run(["verify", "--a", "2", "--lambda", "1", "--T", "1", "--x0", "0", "--nx", "12"], capsys)[0] == 2


def test_sweep_two_steps(capsys):
    _, out, _ = run(["sweep", "--a", "2", "--lambda", "1", "--x0", "0", "--horizon-min", "0.5", "--horizon-max", "1", "--steps", "2"], capsys)
    assert len(out.splitlines()) == 3


def test_sweep_shows_clause_transitions(capsys):
    base = ["sweep", "--a", "2", "--lambda", "1", "--format", "csv", "--steps", "41"]
    _, out, _ = run(base + ["--x0", "-1", "--horizon-min", "1.2", "--horizon-max", "1.6"], capsys)
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert rows[0][2] == "a" and rows[-1][2] == "b"
    assert rows[0][3] == "1" and rows[-1][3] == "2"
    # crossing (3 - x0)/a on the large-rho side brings in the hold arc
    _, out, _ = run(["sweep", "--a", "1", "--lambda", "0.9", "--x0", "0", "--horizon-min", "2.5", "--horizon-max", "3.5", "--steps", "11"], capsys)
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert rows[0][2] == "b" and rows[-1][2] == "c"
    assert len(rows[-1][6].split(";")) == 2


def test_verify_pass_and_forced_fail(capsys):
    argv = ["verify", "--a", "1", "--lambda", "0.9", "--T", "0.5", "--x0", "0"]
    code, out, _ = run(argv, capsys)
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "PASS" and abs(doc["oracle"]["gap"]) < 5e-3
    code, out, _ = run(argv + ["--tol", "0", "--nt", "200", "--nx", "51"], capsys)
    assert code == 1 and json.loads(out)["verdict"] == "FAIL"


def test_verify_reports_second_candidate(capsys):
    code, out, _ = run(["verify", "--a", "2", "--lambda", "1", "--T", "1.6", "--x0", "-1", "--nt", "1000", "--nx", "501"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert [c["certificate"] for c in doc["certificates"]] == ["pass", "fail"]


def test_lemmas_deterministic_single_line(capsys):
    code, out, _ = run(["lemmas", "--trials", "50", "--seed", "3"], capsys)
    assert code == 0 and "status=PASS" in out
    assert run(["lemmas", "--trials", "50", "--seed", "3"], capsys)[1] == out
    _, one, _ = run(["lemmas", "--trials", "1"], capsys)
    assert one.count("\n") == 1


def test_certificate_emit_and_check(tmp_path, capsys):
    path = tmp_path / "cert.json"
    flags = ["--a", "0.5", "--lambda", "0.1", "--T", "9", "--x0", "0.2"]
    assert run(["certificate", *flags, "--out", str(path)], capsys)[0] == 0
    code, out, _ = run(["certificate", *flags, "--check", str(path)], capsys)
    assert code == 0 and json.loads(out)["pass"] is True
    doc = json.loads(path.read_text())
    doc["gamma"] = 0.0
    path.write_text(json.dumps(doc))
    code, out, _ = run(["certificate", *flags, "--check", str(path)], capsys)
    assert code == 1 and "transversality" in json.loads(out)["failures"]
    path.write_text("{not json")
    assert run(["certificate", *flags, "--check", str(path)], capsys)[0] == 2
    assert run(["certificate", *flags, "--candidate", "3"], capsys)[0] == 2


def test_out_file(tmp_path, capsys):
    target = tmp_path / "o.json"
    code, out, _ = run(["synthesize", "--a", "2", "--lambda", "1", "--T", "1", "--x0", "0", "--out", str(target)], capsys)
    assert code == 0 and out == "" and json.loads(target.read_text())["regime"]["theorem"] == "Thm3d"


def _regen() -> None:
    import contextlib
    import io

    GOLDEN.mkdir(exist_ok=True)
    for fname, argv in CASES:
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            assert main(argv) == 0
        (GOLDEN / fname).write_text(buf.getvalue(), encoding="utf-8")


if __name__ == "__main__" and "--regen" in sys.argv:
    _regen()
