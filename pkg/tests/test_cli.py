import json
import subprocess
import sys

import pytest

from jmkd.cli import main
from jmkd.families import FAMILY_IDS

L2_JOB = {"family": "JM-L2", "C": 0, "k": 0, "rho": "0", "verify": {"points": 200, "seed": 7}}


def write(tmp_path, doc, name="job.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_l2_example_passes(tmp_path, capsys):
    job = write(tmp_path, L2_JOB)
    assert main(["verify", job, "--out", str(tmp_path / "out")]) == 0
    rep = json.loads((tmp_path / "out" / "000-JM-L2.report.json").read_text())
    assert rep["passed"] and rep["exact"] == "zero" and rep["points"] == 200 and rep["seed"] == 7
    assert "PASS" in capsys.readouterr().out


def test_unknown_family(tmp_path, capsys):
    job = write(tmp_path, {"family": "JM-XX"})
    assert main(["verify", job, "--out", str(tmp_path)]) == 2
    assert "unknown family" in capsys.readouterr().err


@pytest.mark.parametrize("entry, field", [
    ({"family": "JM-L2", "C": 0, "k": 0, "rho": "rho(s)"}, "rho"),
    ({"family": "JM-L2", "C": 0, "k": 0, "rho": "0", "verify": {"points": -3}}, "points"),
    ({"family": "JM-P2B", "n": 0, "beta": "y", "eta": "0", "zeta": "0", "gamma": {"-2": "1"}}, "gamma[-2]"),
])
def test_config_errors_name_the_field(tmp_path, capsys, entry, field):
    job = write(tmp_path, entry)
    assert main(["verify", job, "--out", str(tmp_path)]) == 2
    assert field in capsys.readouterr().err


def test_bad_json_is_a_config_error(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["verify", str(p)]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_flag_overrides(tmp_path, capsys):
    job = write(tmp_path, L2_JOB)
    assert main(["verify", job, "--out", str(tmp_path), "--seed", "3", "--tol", "1e-9", "--delta", "0.2"]) == 0
    rep = json.loads((tmp_path / "000-JM-L2.report.json").read_text())
    assert rep["seed"] == 3 and rep["tolerance"]["JM"] == 1e-9
    assert main(["verify", job, "--tol", "-1"]) == 2


def test_residual_failure_exits_one(tmp_path, monkeypatch):
    import jmkd.cli as cli

    real = cli.verify_field

    def broken(field_, **kw):
        rep = real(field_, **kw)
        rep.passed = False
        return rep

    monkeypatch.setattr(cli, "verify_field", broken)
    assert main(["verify", write(tmp_path, L2_JOB), "--out", str(tmp_path)]) == 1


def test_list_families(capsys):
    assert main(["list-families", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["family"] for r in rows] == list(FAMILY_IDS)
    l2 = next(r for r in rows if r["family"] == "JM-L2")
    assert {"C", "k"} <= {s.split("(")[0] for s in l2["required"]}


def test_sample_grid_csv(tmp_path):
    entry = {"family": "KD-LX", "n": 1, "a": 2, "b": "1/3", "b_j": {"0": 5},
             "grid": {"x": {"from": 0, "to": 1, "num": 3}, "t": [0, 0.5]}}
    assert main(["sample", write(tmp_path, entry), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "000-KD-LX.csv").read_text().splitlines()
    assert lines[0] == "t,x,y,z,W,u,v"
    assert len(lines) == 1 + 6


def test_reruns_are_byte_identical(tmp_path):
    entries = [L2_JOB, {"family": "KD-LY", "n": 2, "a": 2, "b": "1/3", "verify": {"points": 50, "seed": 1},
                        "grid": {"x": [0.1, 0.2], "y": [0.3]}}]
    job = write(tmp_path, {"jobs": entries})
    outs = []
    for run in ("a", "b"):
        assert main(["verify", job, "--out", str(tmp_path / run)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted((tmp_path / run).iterdir())})
    assert outs[0] == outs[1] and len(outs[0]) == 3


def test_discrepancies_stdout_matches_file(tmp_path, capsys):
    assert main(["discrepancies"]) == 0
    text = capsys.readouterr().out
    assert main(["discrepancies", "--out", str(tmp_path / "r.json")]) == 0
    assert (tmp_path / "r.json").read_text() == text
    assert json.loads(text)["summary"]["total"] > 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "jmkd", "list-families"], capture_output=True, text=True)
    assert r.returncode == 0 and "KD-Q2" in r.stdout


def test_grid_rows_outside_the_domain_are_blank(tmp_path):
    entry = {"family": "KD-LX", "n": 3, "a": 2, "b": "1/3", "b_j": {"0": 5}, "sign": "-",
             "grid": {"x": [-2.5, 0.5]}}
    assert main(["sample", write(tmp_path, entry), "--out", str(tmp_path)]) == 0
    inside, outside = (tmp_path / "000-KD-LX.csv").read_text().splitlines()[1:]
    assert "nan" not in inside
    assert outside.split(",")[4:] == ["nan", "nan", "nan"]
