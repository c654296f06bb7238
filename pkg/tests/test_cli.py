import json

import pytest

from helpers import DESK_BETA, DESK_DELTA, DESK_R, desk_instances
from randksat.cli import main, read_partial
from randksat.errors import MalformedInput
from randksat.formula import read_dimacs, write_dimacs
from randksat.marking import marking_lines, read_marking
from randksat.oracle import brute_count


@pytest.fixture(scope="module")
def desk_file(tmp_path_factory):
    _, f, _, mk = desk_instances(1)[0]
    path = tmp_path_factory.mktemp("cli") / "desk.cnf"
    path.write_text(write_dimacs(f) + "\n".join(marking_lines(mk, f.n)) + "\n")
    return path, f, mk


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out[out.index("{"):]) if "{" in out else out


def test_generate_and_classify(tmp_path, capsys):
    out = tmp_path / "f.cnf"
    assert main(["generate", "--k", "3", "--n", "20", "--alpha", "2", "--seed", "1", "--out", str(out)]) == 0
    f = read_dimacs(out.read_text())
    assert (f.n, f.k, f.m) == (20, 3, 40)
    code, d = run_json(capsys, ["classify", str(out), "--delta-override", "5"])
    assert code == 0 and sum(d["histogram"].values()) == 20


def test_generate_stdout(capsys):
    assert main(["generate", "--k", "2", "--n", "3", "--alpha", "1"]) == 0
    assert "p cnf 3 3\n" in capsys.readouterr().out


def test_count_with_partial(tmp_path, capsys):
    cnf = tmp_path / "f.cnf"
    cnf.write_text("p cnf 3 2\n1 2 0\n-1 3 0\n")
    part = tmp_path / "lam.txt"
    part.write_text("c pins\nv 0 1\n")
    code, d = run_json(capsys, ["count", str(cnf)])
    assert d["count"] == "4"
    code, d = run_json(capsys, ["count", str(cnf), "--partial", str(part)])
    assert d["count"] == "2" and d["pinned"] == 1


def test_read_partial_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("v 9 1\n")
    with pytest.raises(MalformedInput):
        read_partial(p, 3)
    p.write_text("x 1 1\n")
    with pytest.raises(MalformedInput):
        read_partial(p, 3)


def test_malformed_file_exit_code(tmp_path, capsys):
    cnf = tmp_path / "bad.cnf"
    cnf.write_text("p cnf 2 1\n5 0\n")
    assert main(["count", str(cnf)]) == 1
    assert "error" in capsys.readouterr().err


def test_mark_appends(tmp_path, capsys, desk_file):
    _, f, _ = desk_file
    cnf = tmp_path / "m.cnf"
    cnf.write_text(write_dimacs(f))
    argv = ["mark", str(cnf), "--delta-override", str(DESK_DELTA), "--r", str(DESK_R),
            "--beta-marked", str(DESK_BETA[0]), "--beta-aux", str(DESK_BETA[1]), "--max-rounds", "2000"]
    for seed in range(50):
        code = main(argv + ["--seed", str(seed)])
        out = capsys.readouterr().out
        if code == 0:
            break
    d = json.loads(out)
    assert d["valid"]
    mk = read_marking(cnf.read_text(), f.n)
    assert len(mk.marked) == d["sizes"]["marked"]
    # re-marking replaces the lines instead of duplicating them
    main(argv + ["--seed", str(seed)])
    capsys.readouterr()
    assert cnf.read_text().count("c mark") == f.n


def test_sample_desk(desk_file, capsys):
    path, f, _ = desk_file
    code, d = run_json(capsys, ["sample", str(path), "--mode", "desk", "--rho", "1", "--steps", "5",
                                "--json", "--runs", "3", "--delta-override", str(DESK_DELTA)])
    assert code == 0 and len(d["runs"]) == 3
    vals = {int(line.split()[1]): line.split()[2] == "1" for line in d["assignment"]}
    assert f.is_satisfied_by([vals[v] for v in range(f.n)])


def test_couple_exact(desk_file, capsys):
    path, _, mk = desk_file
    code, d = run_json(capsys, ["couple", str(path), "--u", str(min(mk.marked)), "--runs", "200", "--exact",
                                "--delta-override", str(DESK_DELTA)])
    assert code == 0 and "exact_sum_abs_influence" in d and "sum_discrepancy" in d


@pytest.mark.parametrize("suite", ["count", "stationarity", "spectral"])
def test_verify_suites(desk_file, capsys, suite):
    path, f, _ = desk_file
    code, d = run_json(capsys, ["verify", str(path), "--suite", suite, "--delta-override", str(DESK_DELTA)])
    assert code == 0 and d["suite"] == suite
    if suite == "count":
        assert d["brute"] == str(brute_count(f))


def test_verify_tv(desk_file, capsys):
    path, _, _ = desk_file
    code, d = run_json(capsys, ["verify", str(path), "--suite", "tv", "--runs", "2000", "--steps", "10",
                                "--delta-override", str(DESK_DELTA)])
    assert code == 0 and d["violations"] == 0 and d["radius"] > 0


def test_analyze_csv(tmp_path):
    out = tmp_path / "lin.csv"
    assert main(["analyze", "--experiment", "linearity", "--k", "5", "--n", "100", "200", "--alpha", "2",
                 "--seeds", "2", "--csv", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("schema,") and len(lines) == 5


def test_analyze_json(capsys):
    code, d = run_json(capsys, ["analyze", "--experiment", "tree-excess", "--k", "10", "--n", "1000",
                                "--alpha", "2", "--samples", "10", "--json"])
    assert code == 0 and d["summary"][0]["size_limit"] == 6
