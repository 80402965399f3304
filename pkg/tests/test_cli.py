import csv
import io
import json
import subprocess
import sys

import pytest

from randcubical.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def square_file(tmp_path):
    p = tmp_path / "square.txt"
    p.write_text("# hollow square\n2;0,0;1,0\n2;0,1;1,0\n2;0,0;0,1\n2;1,0;0,1\n")
    return p


def test_betti_subcommand(square_file, capsys):
    code, out, _ = run(["betti", str(square_file), "--close"], capsys)
    assert code == 0
    assert out.splitlines() == ["k,beta_k", "0,1", "1,1", "2,0", "euler,0"]


def test_betti_requires_closed_input(tmp_path, capsys):
    p = tmp_path / "open.txt"
    p.write_text("2;0,0;1,0\n")
    code, _, err = run(["betti", str(p)], capsys)
    assert code == 2 and "missing" in err


def test_sample_then_persist(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    assert main(["sample", "--model", "uniform:d=2", "--n", "3", "--seed", "4", "--out", str(cfg)]) == 0
    lines = cfg.read_text().splitlines()
    assert len(lines) == 13 ** 2
    diag, curve = tmp_path / "d.csv", tmp_path / "c.csv"
    code, _, _ = run(["persist", str(cfg), "--q", "1", "--window-n", "2", "--out", str(diag),
                      "--curve-out", str(curve)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(diag.read_text())))
    assert all(float(r["birth"]) <= float(r["death"]) for r in rows)
    assert curve.read_text().startswith("t,beta\n")


def test_lln_with_config_file_and_override(tmp_path, capsys):
    conf = tmp_path / "plan.cfg"
    conf.write_text("model = uniform:d=2\nq = 1\nn-list = 2,3\nsamples = 2\nt-grid = 0:1:5\nformat = json\n")
    code, out, _ = run(["lln", "--config", str(conf), "--q", "0"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert {r["q"] for r in doc["rows"]} == {0}
    assert len(doc["rows"]) == 10


def test_outputs_deterministic(tmp_path, capsys):
    argv = ["clt", "--model", "bernoulli:d=2,k=1", "--q", "1", "--t", "0.5", "--n-list", "2,3", "--samples", "10"]
    a = run(argv, capsys)[1]
    b = run(argv, capsys)[1]
    assert a == b and a.startswith("model,q,n,t,var_over_volume,ks_distance,samples\n")


def test_invalid_plan_exit_code(capsys):
    assert run(["lln", "--model", "uniform:d=2", "--q", "5"], capsys)[0] == 2
    assert run(["lln", "--model", "costafarber:d=2,p=1,0.5,0.5"], capsys)[0] == 2
    assert run(["lln", "--model", "nonsense"], capsys)[0] == 2
    assert run(["lln"], capsys)[0] == 2
    assert run(["clt", "--model", "uniform:d=2", "--n-list", "2"], capsys)[0] == 2


def test_checks_and_property_failure_exit_code(capsys):
    code, out, _ = run(["checks", "--check", "lemmas", "--trials", "10"], capsys)
    assert code == 0 and "betti_difference,10,0" in out
    # an impossible threshold turns the stabilization check into a property failure
    code, _, _ = run(["checks", "--check", "stabilization", "--trials", "2", "--n-list", "2,3,4",
                      "--min-fraction", "1.5"], capsys)
    assert code == 1


def test_positivity_subcommand(capsys):
    code, out, _ = run(["positivity", "--model", "uniform:d=2", "--q", "0", "--t", "0.2", "--samples", "3",
                        "--n", "8"], capsys)
    assert code == 0
    row = list(csv.DictReader(io.StringIO(out)))[0]
    assert float(row["p_exact"]) > 0 and row["K"] == "2"


def test_lifetime_lln_subcommand(capsys):
    code, out, _ = run(["lifetime-lln", "--model", "bernoulli:d=2,k=1", "--q", "1", "--n-list", "2,4",
                        "--samples", "2"], capsys)
    assert code == 0 and out.startswith("model,q,n,mean_norm_lifetime")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "randcubical.cli", "betti", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "--field" in proc.stdout
