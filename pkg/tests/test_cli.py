import csv
import io
import json
import math

import pytest

from slext.cli import main

DIRICHLET = '{"type":"separated","alpha":3.141592653589793,"beta":3.141592653589793}'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return {r["field"]: r["value"] for r in csv.DictReader(io.StringIO(text))}


def test_spectrum_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--builtin", "bessel", "--gamma", "0.5", "--a", "0",
                       "--b", "1", "--spec", DIRICHLET, "--n", "5")
    assert code == 0
    vals = [float(r["eigenvalue"]) for r in csv.DictReader(io.StringIO(out))]
    assert vals == pytest.approx([(k * math.pi) ** 2 for k in range(1, 6)], rel=1e-8)


def test_spectrum_json_to_file(capsys, tmp_path):
    path = tmp_path / "s.json"
    code, out, _ = run(capsys, "spectrum", "--alpha-deg", "180", "--beta", str(math.pi / 2),
                       "--n", "2", "--format", "json", "-o", str(path))
    assert code == 0 and out == ""
    data = json.loads(path.read_text())
    assert data["eigenvalues"][0]["eigenvalue"] == pytest.approx((math.pi / 2) ** 2, rel=1e-8)


@pytest.mark.parametrize("argv, code, needle", [
    (["spectrum", "--spec", "{not json"], 1, "SpecParse"),
    (["spectrum", "--spec", '{"type":"coupled","eta":0,"R":[[2,0],[0,1]]}'], 1, "DetNotOne"),
    (["spectrum", "--bogus"], 1, ""),
    (["decompose", "--builtin", "bessel", "--gamma", "0.3", "--spec", DIRICHLET], 1, "NotSymmetric"),
    (["decompose", "--builtin", "symmetric_bessel", "--gamma", "0.3",
      "--spec", '{"type":"coupled","eta":0,"R":[[2,1],[1,1]]}'], 1, "NotReflectionInvariant"),
    (["spectrum", "--tol", "2", "--spec", DIRICHLET], 1, ""),
])
def test_error_exit_codes(capsys, argv, code, needle):
    c, _, err = run(capsys, *argv)
    assert c == code
    assert needle in err and len(err.strip().splitlines()) == 1


def test_classify_verdicts(capsys):
    _, out, _ = run(capsys, "classify", "--spec", DIRICHLET)
    assert rows(out)["verdict"] == "nonnegative (Friedrichs, dim W=0)"
    _, out, _ = run(capsys, "classify", "--spec",
                    json.dumps({"type": "separated", "alpha": math.pi / 8, "beta": math.pi}))
    assert rows(out)["verdict"] == "not nonnegative, lambda_min<0 witness"
    _, out, _ = run(capsys, "classify", "--spec", '{"type":"coupled","eta":0,"R":[[1,1],[0,1]]}')
    assert rows(out)["verdict"] == "nonnegative, kernel dim 2, B=0"


def test_range(capsys):
    code, out, _ = run(capsys, "range", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["alpha_min"] == pytest.approx(math.pi / 4, abs=1e-12)
    assert d["difference"] <= 1e-9


def test_decompose_text(capsys):
    code, out, _ = run(capsys, "decompose", "--builtin", "symmetric_bessel", "--gamma", "0.5",
                       "--spec", '{"type":"coupled","eta":0,"R":[[1,0],[0,1]]}', "--verify", "--n", "4")
    assert code == 0
    assert "union_check: pass" in out and "alpha_p: 1.5707963267949" in out


def test_decompose_two_interval(capsys):
    code, out, _ = run(capsys, "decompose", "--two-interval", "--beta-p", str(math.pi / 2),
                       "--spec", '{"type":"coupled","eta":0,"R":[[-1,0],[0,-1]]}', "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["alpha"] == pytest.approx(math.pi / 2) and d["alpha_p"] == pytest.approx(math.pi)


def test_krein(capsys):
    code, out, _ = run(capsys, "krein", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["multiplicity"] == 2 and abs(d["lowest_eigenvalue"]) <= 1e-7


def test_hardy(capsys):
    code, out, _ = run(capsys, "hardy", "--gammas", "0", "0.5", "--verify", "--trials", "20")
    r = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and list(r[0]) == ["gamma", "lamb_zero_1", "constant", "interval_length",
                                        "min_relative_margin"]
    assert float(r[1]["constant"]) == pytest.approx(math.pi**2, rel=1e-10)


def test_selftest_single(capsys):
    code, out, _ = run(capsys, "selftest", "--only", "1")
    assert code == 0 and out.split()[:3] == ["criterion", "1", "PASS"]


def test_selftest_tight_tolerance_fails(capsys):
    code, out, _ = run(capsys, "selftest", "--only", "1", "--tol", "1e-1")
    assert code == 2 and "FAIL" in out
