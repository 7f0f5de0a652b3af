import json
import os
import subprocess
import sys

import pytest

from kesten.cli import main, read_spec_file
from kesten.words import WordSyntaxError


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_walks_count(capsys):
    code, out, err = run(["walks", "count", "--rank", "1", "--n", "4"], capsys)
    assert code == 0
    assert out.splitlines()[-1] == "4,6"
    summary = json.loads(err)
    assert summary["schema_version"] == 1 and summary["result"]["count"] == 6
    assert summary["config"]["rank"] == 1 and summary["config"]["n"] == 4


def test_rho_return_sequence(capsys):
    code, out, _ = run(["rho", "return", "--rank", "2", "--n", "8"], capsys)
    rows = [line.split(",") for line in out.splitlines()[1:]]
    vals = [float(r[3]) for r in rows]
    assert code == 0 and len(vals) == 8
    assert abs(vals[1] - 0.575) < 1e-3
    assert all(y >= x for x, y in zip(vals, vals[1:]))


def test_ineq_finite_n(capsys):
    code, out, _ = run(["ineq", "finite-n", "--rank", "3", "--subgroup", "a,b", "--n", "6"], capsys)
    assert code == 0
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert [r[0] for r in rows] == ["4", "6"]
    assert all(float(r[3]) >= 0 and r[4] == "True" for r in rows)


def test_measure_csv_exact(capsys):
    code, out, err = run(["measure", "nu", "--rank", "1", "--n", "1"], capsys)
    assert code == 0 and "1,5,12" in out.splitlines()
    assert json.loads(err)["result"]["total"] == {"num": 1, "den": 1, "float": 1.0}


def test_out_prefix(tmp_path, capsys):
    prefix = str(tmp_path / "run")
    code, out, _ = run(["cycles", "density-dp", "--rank", "2", "--subgroup", "aa,bb", "--k", "2", "--n", "8", "--out", prefix], capsys)
    assert code == 0 and out == ""
    with open(prefix + ".csv") as fh:
        assert fh.readline().strip() == "j,q_num,q_den,q_float"
    with open(prefix + ".json") as fh:
        assert json.load(fh)["result"]["cesaro_final"]["den"] > 0


def test_spec_file(tmp_path, capsys):
    spec = tmp_path / "g.txt"
    spec.write_text("# group\nrank: 3\nsubgroup: a, b\n")
    code, out, _ = run(["walks", "count", "--spec", str(spec), "--n", "2"], capsys)
    assert code == 0 and out.splitlines()[-1] == "2,18"


def test_spec_file_errors(tmp_path):
    spec = tmp_path / "bad.txt"
    spec.write_text("rank: 2\nsubgroup: aa, bQ\n")
    with pytest.raises(WordSyntaxError) as exc:
        read_spec_file(str(spec))
    assert (exc.value.line, exc.value.column) == (2, 16)
    spec.write_text("rank 2\n")
    with pytest.raises(WordSyntaxError) as exc:
        read_spec_file(str(spec))
    assert exc.value.line == 1


def test_errors_exit_two(capsys):
    code, _, err = run(["realize", "--graph", "petersen"], capsys)
    assert code == 2 and "odd" in err
    code, _, err = run(["walks", "count", "--rank", "2", "--subgroup", "ax", "--n", "2"], capsys)
    assert code == 2 and "column 2" in err


def test_violation_exit_one(capsys, monkeypatch):
    import kesten.walks as walks
    from fractions import Fraction
    real = walks.quasi_invariance_margin

    def broken(*args, **kw):
        r = real(*args, **kw)
        return walks.QInvReport(r.n, r.nu_As, r.nu_A, r.rho_sq_lower, r.subtrahend, Fraction(-1))

    monkeypatch.setattr(walks, "quasi_invariance_margin", broken)
    code, out, err = run(["qinv", "--rank", "1", "--n", "1", "--set", "1", "--letter", "a"], capsys)
    assert code == 1 and "violation" in err and out.startswith("n,")


@pytest.mark.parametrize("args", [
    ["power", "--graph", "petersen", "--k", "2"],
    ["cycles", "indicator", "--graph", "petersen", "--k", "5"],
    ["cycles", "density-mc", "--rank", "2", "--subgroup", "aa,bb", "--k", "2", "--n", "16", "--walkers", "500"],
    ["realize", "--graph", "k5"],
    ["rho", "finite", "--graph", "petersen"],
    ["rho", "rayleigh", "--rank", "2", "--radius", "5"],
    ["ineq", "asymptotic", "--rank", "3", "--subgroup", "a,b", "--n", "8"],
    ["qinv", "--graph", "petersen", "--n", "2", "--set", "0,1", "--letter", "0"],
])
def test_subcommands_succeed(args, capsys):
    code, out, err = run(args, capsys)
    assert code == 0, err
    assert json.loads(err)["status"] == "ok"


def test_byte_identical_across_backends(tmp_path):
    outs = []
    for threads, backend in (("1", "numba"), ("1", "numpy")):
        env = dict(os.environ, KESTEN_NUM_THREADS=threads, KESTEN_BACKEND=backend)
        proc = subprocess.run([sys.executable, "-m", "kesten", "cycles", "density-mc", "--rank", "2",
                               "--subgroup", "aa,bb", "--k", "2", "--n", "24", "--walkers", "2000", "--seed", "3"],
                              capture_output=True, env=env, check=True)
        outs.append(proc.stdout)
    assert outs[0] == outs[1]
