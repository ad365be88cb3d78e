import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from mixtsirelson import AdmissibleSeq, AnK, FiniteMixed
from mixtsirelson.cli import (EXIT_BUDGET, EXIT_OK, EXIT_UNDETERMINED, EXIT_USAGE, SpecError, emit_spec,
                              parse_spec, run)
from mixtsirelson.families import (Empty, ExplicitFinite, PairConsecutive, PairTailPow2, Schreier, Singletons,
                                   UnionOf)
from mixtsirelson.foundations import Constant, ExplicitList, InvLinear, InvLogPow, PowerLaw

GOLDEN = Path(__file__).parent / "golden"


def spec(name):
    return str(GOLDEN / name)


def invoke(capsysbinary, *args):
    code = run(list(args))
    out = capsysbinary.readouterr()
    return code, out.out.decode(), out.err.decode()


def test_parse_examples():
    ts = parse_spec('{"space":{"form":"FiniteMixed","entries":[{"family":{"kind":"Schreier"},"theta":"1/2"}]}}')
    assert ts == FiniteMixed(((Schreier(), Fraction(1, 2)),))
    sch = parse_spec('{"space":{"form":"AdmissibleSeq","coeffs":{"form":"InvLogPow","r":"1"}}}')
    assert sch == AdmissibleSeq(InvLogPow(1))
    for name in ("bad_theta.spec", "unknown_field.spec", "float_theta.spec"):
        with pytest.raises(SpecError):
            parse_spec((GOLDEN / name).read_text())


CATALOG_SPACES = [
    FiniteMixed(((AnK(3), Fraction(1, 3)), (Schreier(), Fraction(1, 2)), (Schreier(2), Fraction(1, 5)))),
    FiniteMixed(((Singletons(), 1), (PairTailPow2(), Fraction(2, 3)), (PairConsecutive(), Fraction(1, 7)),
                 (Empty(), Fraction(1, 2)))),
    FiniteMixed(((ExplicitFinite(((), (1,), (3,), (1, 3))), Fraction(1, 2)),
                 (UnionOf((AnK(1), PairConsecutive())), 1))),
    AdmissibleSeq(ExplicitList((Fraction(1, 2), Fraction(9, 10)), Fraction(3, 10))),
    AdmissibleSeq(ExplicitList((Fraction(1, 2),))),
    AdmissibleSeq(Constant(Fraction(2, 3))),
    AdmissibleSeq(InvLinear()),
    AdmissibleSeq(PowerLaw(Fraction(9, 10), Fraction(1, 2))),
    AdmissibleSeq(InvLogPow(Fraction(3, 4))),
]


@pytest.mark.parametrize("space", CATALOG_SPACES, ids=range(len(CATALOG_SPACES)))
def test_round_trip(space):
    assert parse_spec(emit_spec(space, "x")) == space


@pytest.mark.parametrize("args,golden,code", [
    (("classify", "tsirelson.spec"), "classify_tsirelson.txt", EXIT_UNDETERMINED),
    (("lambda", "--max", "16", "a2theta1.spec"), "lambda_a2theta1.txt", EXIT_OK),
    (("--format", "csv", "lambda", "--max", "3", "invlinear.spec"), "lambda_invlinear.csv", EXIT_OK),
    (("--format", "csv", "lambda", "--max", "4", "schlumprecht.spec"), "lambda_schlumprecht.csv", EXIT_OK),
    (("compare", "a2_9_10.spec", "a3_9_10.spec"), "compare_case3.txt", EXIT_OK),
    (("norm", "tsirelson.spec", "--vector", "segment 3..6", "--iterated", "3"), "norm_tsirelson.txt", EXIT_OK),
    (("dualball", "tsirelson.spec", "--support", "2,3", "--depth", "1"), "dualball_tsirelson.txt", EXIT_OK),
])
def test_goldens(capsysbinary, args, golden, code):
    args = [spec(a) if a.endswith(".spec") else a for a in args]
    got, out, _ = invoke(capsysbinary, *args)
    assert got == code
    assert out == (GOLDEN / golden).read_text()


def test_csv_rows_for_invlinear(capsysbinary):
    _, out, _ = invoke(capsysbinary, "--format", "csv", "lambda", "--max", "3", spec("invlinear.spec"))
    assert out.splitlines()[1:] == ["1,1/1", "2,1/1", "3,1/1"]


def _strip_timing(text):
    doc = json.loads(text)
    doc.pop("timing")
    return doc


def test_json_output_is_deterministic(capsysbinary, tmp_path):
    args = ["--format", "json", "classify", spec("a2_9_10.spec")]
    _, first, _ = invoke(capsysbinary, *args)
    _, second, _ = invoke(capsysbinary, *args)
    assert _strip_timing(first) == _strip_timing(second)
    a = json.dumps(_strip_timing(first), sort_keys=True)
    assert a == json.dumps(_strip_timing(second), sort_keys=True)
    out = tmp_path / "report.json"
    invoke(capsysbinary, "--out", str(out), "classify", spec("a2_9_10.spec"))
    assert _strip_timing(out.read_text()) == _strip_timing(first)


def test_report_fields(capsysbinary):
    _, out, _ = invoke(capsysbinary, "--format", "json", "norm", spec("a2theta1.spec"),
                       "--vector", '{"1": "1/2", "3": "-2"}')
    doc = json.loads(out)
    assert doc["results"]["norm"] == "5/2"
    assert set(doc) == {"command", "inputs", "inputsDigest", "results", "timing", "version"}
    assert len(doc["inputsDigest"]) == 64


@pytest.mark.parametrize("args,code", [
    (("classify", "bad_theta.spec"), EXIT_USAGE),
    (("classify", "unknown_field.spec"), EXIT_USAGE),
    (("classify", "float_theta.spec"), EXIT_USAGE),
    (("classify", "missing.spec"), EXIT_USAGE),
    (("lambda", "a2theta1.spec"), EXIT_USAGE),
    (("norm", "tsirelson.spec", "--vector", "segment 5..2"), EXIT_USAGE),
    (("norm", "example2.spec", "--vector", "segment 1..9"), EXIT_BUDGET),
    (("dualball", "a2theta1.spec", "--support", "1,2,3,4,5,6,7", "--depth", "5"), EXIT_OK),
    (("compare", "schlumprecht.spec", "tsirelson.spec"), EXIT_UNDETERMINED),
    (("index", '{"kind": "Nope"}'), EXIT_USAGE),
])
def test_exit_codes(capsysbinary, args, code):
    args = [spec(a) if a.endswith(".spec") else a for a in args]
    got, _, _ = invoke(capsysbinary, *args)
    assert got == code


def test_node_budget_exit(capsysbinary, tmp_path):
    doc = json.loads((GOLDEN / "a2theta1.spec").read_text())
    doc["options"] = {"nodeBudget": 20}
    path = tmp_path / "small.spec"
    path.write_text(json.dumps(doc))
    got, _, err = invoke(capsysbinary, "dualball", str(path), "--support", "1,2,3,4", "--depth", "3")
    assert got == EXIT_BUDGET and "budget" in err


def test_family_commands(capsysbinary):
    code, out, _ = invoke(capsysbinary, "index", '{"kind": "PairTailPow2"}')
    assert (code, out) == (EXIT_OK, "index = 2\n")
    code, out, _ = invoke(capsysbinary, "admissible", '{"kind": "Schreier"}', "--sets", "[[2], [3]]")
    assert out == "admissible = true witness [2, 3]\n"
    code, out, _ = invoke(capsysbinary, "witness", spec("a2theta1.spec"), "--n", "4", "--eps", "1/10",
                          "--lmax", "2")
    assert out == "scale 1 block length 1: norm = 4/1\n"


def test_jobs_match_serial(capsysbinary, tmp_path):
    vectors = tmp_path / "v.json"
    vectors.write_text(json.dumps(["segment 1..6", {"2": "1/3", "5": "-4"}, "segment 3..8"]))
    _, serial, _ = invoke(capsysbinary, "--format", "json", "norm", spec("tsirelson.spec"),
                          "--vector-file", str(vectors))
    _, par, _ = invoke(capsysbinary, "--format", "json", "norm", spec("tsirelson.spec"),
                       "--vector-file", str(vectors), "--jobs", "2")
    assert json.loads(serial)["results"] == json.loads(par)["results"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mixtsirelson", "classify", spec("tsirelson.spec")],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_UNDETERMINED
    assert proc.stdout == (GOLDEN / "classify_tsirelson.txt").read_text()
