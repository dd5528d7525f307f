import csv
import json
import textwrap

import pytest

from isingperc import cli, verify
from isingperc.verify import CheckOutcome

BASIC = """
[experiment]
kind = estimate

[model]
kind = bernoulli
p = 0.5927

[geometry]
sizes = 2, 4

[plan]
n_samples = 300
seed = 1

[estimate]
event = onearm plus n={n}

[output]
dir = out
"""


def write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


def read_rows(path):
    with open(path) as f:
        return list(csv.reader(f))


def test_estimate_run_writes_one_row_per_size(tmp_path):
    path = write(tmp_path, BASIC)
    assert cli.main(["-q", "run", str(path)]) == 0
    rows = read_rows(tmp_path / "out" / "results.csv")
    assert rows[0] == list(cli.COLUMNS)
    assert [r[1] for r in rows[1:]] == ["2", "4"]
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["status"] == "ok"
    assert summary["model"] == {"kind": "bernoulli", "p": 0.5927}
    assert len(summary["config_sha256"]) == 64


def test_reruns_are_byte_identical(tmp_path):
    path = write(tmp_path, BASIC)
    cli.run_experiment(str(path))
    first = (tmp_path / "out" / "results.csv").read_bytes(), (tmp_path / "out" / "summary.json").read_bytes()
    cli.run_experiment(str(path))
    assert first == ((tmp_path / "out" / "results.csv").read_bytes(),
                     (tmp_path / "out" / "summary.json").read_bytes())


def test_default_output_dir(tmp_path):
    path = write(tmp_path, BASIC.replace("[output]\ndir = out\n", ""), "plain.ini")
    assert cli.run_experiment(str(path)) == 0
    assert (tmp_path / "plain_out" / "results.csv").exists()


@pytest.mark.parametrize("old,new,line,column", [
    ("p = 0.5927", "p = abc", 7, 5),
    ("sizes = 2, 4", "sizes = 2, x", 10, 9),
    ("kind = estimate", "kind = estimat", 3, 8),
    ("seed = 1\n", "", 12, 1),
    ("event = onearm plus n={n}", "event = onearm up n={n}", 17, 9),
    ("[model]", "[model", 5, 1),
    ("[model]", "model", 5, 1),
])
def test_config_errors_report_location(tmp_path, capsys, old, new, line, column):
    path = write(tmp_path, BASIC.replace(old, new))
    assert cli.main(["run", str(path)]) == 2
    err = capsys.readouterr().err
    assert f"line {line}, column {column}" in err


def test_ising_only_rejects_bernoulli_curves(tmp_path, capsys):
    text = """
    [experiment]
    kind = arm-exponent
    [model]
    kind = ising
    T = 3.0
    h = 0.1
    [geometry]
    sizes = 2, 4
    [plan]
    n_samples = 10
    seed = 1
    [arms]
    event = fourarm
    """
    assert cli.run_experiment(str(write(tmp_path, text))) == 2
    assert "Bernoulli-only" in capsys.readouterr().err


def test_arm_exponent_run(tmp_path):
    text = """
    [experiment]
    kind = arm-exponent
    [model]
    kind = bernoulli
    p = 0.5927
    [geometry]
    sizes = 2, 4, 8
    [plan]
    n_samples = 2000
    seed = 3
    [arms]
    event = onearm
    """
    assert cli.run_experiment(str(write(tmp_path, text))) == 0
    summary = json.loads((tmp_path / "exp_out" / "summary.json").read_text())
    assert summary["fits"]["onearm"]["slope"] < 0


def test_corrlen_run(tmp_path):
    text = """
    [experiment]
    kind = corrlen
    [model]
    kind = bernoulli
    p = 1.0
    [plan]
    n_samples = 100
    seed = 1
    [corrlen]
    eps = 0.05
    n_max = 8
    """
    assert cli.run_experiment(str(write(tmp_path, text))) == 0
    cl = json.loads((tmp_path / "exp_out" / "summary.json").read_text())["correlation_length"]
    assert (cl["L"], cl["status"], cl["side"]) == (1, "resolved", "super")


def test_scaling_with_given_exponents_and_report(tmp_path, capsys):
    text = """
    [experiment]
    kind = scaling
    [model]
    kind = bernoulli
    p = 0.5927
    [plan]
    n_samples = 1
    seed = 1
    [scaling]
    delta_r = 9.1, 0
    nu = 1.3333333333333333, 0
    measured_eta = 0.2, 0.01
    """
    path = write(tmp_path, text)
    assert cli.run_experiment(str(path)) == 0
    summary = tmp_path / "exp_out" / "summary.json"
    sc = json.loads(summary.read_text())["scaling"]
    assert sc["derived"]["delta"][0] == pytest.approx(17.2)
    assert "eta" in sc["residuals"]
    capsys.readouterr()
    assert cli.main(["report", str(summary)]) == 0
    out = capsys.readouterr().out
    assert "delta_r" in out.splitlines()[0] and "17.2" in out


def test_report_missing_file(capsys, tmp_path):
    assert cli.main(["report", str(tmp_path / "nope.json")]) == 2


def test_verify_exit_codes(tmp_path, monkeypatch):
    ok = CheckOutcome("fine", True, "")
    monkeypatch.setattr(verify, "QUICK", [("fine", lambda: ok)])
    path = write(tmp_path, "[experiment]\nkind = verify\n")
    assert cli.run_experiment(str(path)) == 0
    assert cli.main(["-q", "verify"]) == 0
    monkeypatch.setattr(verify, "QUICK", [("broken", lambda: CheckOutcome("broken", False, "x"))])
    assert cli.run_experiment(str(path)) == 1
    assert cli.main(["-q", "verify"]) == 1
    summary = json.loads((tmp_path / "exp_out" / "summary.json").read_text())
    assert summary["status"] == "failed: broken"
