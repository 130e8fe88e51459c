import io
import subprocess
import sys

import pytest
from conftest import TRI_TEXT

from taboohit import parse_chain
from taboohit.cli import run

DIVERGENT = """\
states: a b c
conservative: false
rate: a b 1
rate: b a 1
rate: c a 1
diag: a -1
diag: b -1
diag: c -2
"""


@pytest.fixture
def tri_file(tmp_path):
    p = tmp_path / "tri.chain"
    p.write_text(TRI_TEXT)
    return str(p)


@pytest.fixture
def div_file(tmp_path):
    p = tmp_path / "div.chain"
    p.write_text(DIVERGENT)
    return str(p)


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_hit_with_taboo(tri_file):
    assert call("hit", tri_file, "--from", "0", "--to", "1", "--taboo", "2") == (
        0,
        "value=0.500000000000 method=theorem1\n",
        "",
    )


def test_hit_recurrent_base(tri_file):
    code, out, _ = call("hit", tri_file, "--from", "0", "--to", "1")
    assert code == 0 and out == "value=1.000000000000 method=base\n"


def test_target_in_taboo_notice(tri_file):
    code, out, err = call("hit", tri_file, "--from", "0", "--to", "1", "--taboo", "1,2")
    assert code == 0
    assert out == "value=0.500000000000 method=theorem1\n"
    assert err.startswith("notice:")


@pytest.mark.parametrize("method", ["firststep", "reduce", "vi"])
def test_hit_methods(tri_file, method):
    code, out, _ = call("hit", tri_file, "--from", "0", "--to", "1", "--taboo", "2", "--method", method)
    assert code == 0
    value, tag = out.split()
    assert abs(float(value.split("=")[1]) - 0.5) < 1e-10
    assert tag == f"method={method}"


def test_hit_monte_carlo(tri_file):
    code, out, _ = call("hit", tri_file, "--from", "0", "--to", "1", "--taboo", "2", "--method", "mc", "--trials", "20000")
    assert code == 0
    fields = dict(f.split("=") for f in out.split())
    assert fields["method"] == "mc"
    assert abs(float(fields["value"]) - 0.5) < 4 * float(fields["stderr"])


def test_hit_theorem3_refuses_recurrent(tri_file):
    code, out, err = call("hit", tri_file, "--from", "0", "--to", "1", "--taboo", "2", "--method", "theorem3")
    assert code == 1 and out == "" and err


def test_cross_check_all(tri_file):
    code, out, _ = call("hit", tri_file, "--from", "0", "--to", "1", "--taboo", "2", "--method", "all")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) >= 3
    assert all(line.startswith("value=0.5000000000") for line in lines)


def test_validate(tri_file, div_file):
    code, out, _ = call("validate", tri_file)
    assert code == 0 and out.endswith("valid\n")
    code, out, _ = call("validate", div_file)
    assert code == 1 and out.endswith("invalid\n")


def test_green_matrix(tri_file):
    code, out, _ = call("green", tri_file, "--taboo", "2")
    assert code == 0
    assert out.splitlines() == [
        "taboo=2",
        "state 0 1",
        "0 1.33333333333 0.666666666667",
        "1 0.666666666667 1.33333333333",
        "2 1 1",
    ]


def test_green_recurrent(tri_file):
    assert call("green", tri_file)[:2] == (0, "recurrent\n")


def test_divergence_exit_code(div_file):
    code, out, err = call("green", div_file, "--taboo", "c")
    assert code == 2
    assert out == ""
    assert err.startswith("numerical degeneracy [taboo Green]")
    assert len(err.splitlines()) == 1


def test_reduce_trace(tri_file):
    code, out, _ = call("reduce", tri_file, "--from", "0", "--to", "1", "--taboo", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "value=0.500000000000 method=reduce"
    assert lines[1].startswith("step 1: base")


def test_reduce_requires_taboo(tri_file):
    assert call("reduce", tri_file, "--from", "0", "--to", "1")[0] == 1


def test_simulate(tri_file):
    code, out, _ = call("simulate", tri_file, "--from", "0", "--to", "1", "--taboo", "2", "--trials", "5000", "--seed", "7")
    assert code == 0
    keys = [line.split("=")[0] for line in out.splitlines()]
    assert keys == ["mean", "stderr", "trials", "censored"]
    code, out, _ = call(
        "simulate", tri_file, "--from", "0", "--to", "1", "--taboo", "2", "--trials", "5000", "--seed", "7", "--after-exit"
    )
    assert "zero_atom=" in out


def test_simulate_requires_seed(tri_file):
    assert call("simulate", tri_file, "--from", "0", "--to", "1", "--trials", "10")[0] == 1


def test_lattice_output_parses():
    code, out, _ = call("lattice", "--dim", "1", "--radius", "1")
    assert code == 0
    g = parse_chain(out)
    assert g.labels == ("-1", "0", "1")
    assert not g.conservative


@pytest.mark.parametrize(
    "argv",
    [
        ["hit", "missing.chain", "--from", "0", "--to", "1"],
        ["frobnicate"],
        ["hit"],
    ],
)
def test_usage_and_input_errors(argv):
    assert call(*argv)[0] == 1


def test_unknown_state(tri_file):
    code, _, err = call("hit", tri_file, "--from", "0", "--to", "9")
    assert code == 1 and "9" in err


def test_bad_chain_file(tmp_path):
    p = tmp_path / "bad.chain"
    p.write_text("states: a b\nconservative: true\nrate: a b -1\n")
    code, _, err = call("validate", str(p))
    assert code == 1 and "line 3" in err


def test_subprocess_byte_identical(tri_file):
    argv = [sys.executable, "-m", "taboohit", "simulate", tri_file, "--from", "0", "--to", "1", "--taboo", "2"]
    argv += ["--trials", "20000", "--seed", "7"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"mean=")
