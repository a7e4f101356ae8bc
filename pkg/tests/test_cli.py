import json

import numpy as np
import pytest

from starkspec.cli import EXIT_OK, EXIT_USAGE, main, parse_grid, UsageError
from starkspec._version import __version__


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if not ln.startswith("#")][0].split(",")
    body = [ln for ln in lines if not ln.startswith("#")][1:]
    return header, np.array([[float(v) for v in ln.split(",")] for ln in body])


def test_parse_grid():
    assert parse_grid("-2:3:6") == [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
    assert parse_grid("0.5,1") == [0.5, 1.0]
    assert parse_grid(2) == [2.0]
    for bad in ("a:b:c", "1:2:0", ",", "x"):
        with pytest.raises(UsageError):
            parse_grid(bad)


def test_presets_lists_all(capsys):
    assert main(["presets"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("zero", "power_law", "resonant", "weierstrass_smooth"):
        assert name in out


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out


def test_malformed_flag_exits_2_without_files(tmp_path):
    assert run(tmp_path, "survey", "--bogus", "1") == EXIT_USAGE
    assert run(tmp_path, "survey", "--lambda", "1:2") == EXIT_USAGE
    assert run(tmp_path, "survey", "--potential", "nope") == EXIT_USAGE
    assert run(tmp_path, "survey", "--Xi", "5") == EXIT_USAGE
    assert list(tmp_path.iterdir()) == []


def test_survey_zero_baseline(tmp_path):
    assert run(tmp_path, "survey", "--potential", "zero", "--lambda", "0", "--Xi", "1e4") == EXIT_OK
    (path,) = tmp_path.glob("survey_*.json")
    rep = json.loads(path.read_text())
    assert [v["verdict"] for v in rep["verdicts"]] == ["ac_consistent"]
    assert rep["version"] == __version__ and rep["config_hash"] in path.name


def test_survey_negative_grid_and_outputs(tmp_path):
    code = run(tmp_path, "survey", "--potential", "power_law", "--A", "1", "--beta", "0.5",
               "--lambda", "-2:3:3", "--Xi", "1e3", "--csv", "--plots", "--workers", "2")
    assert code == EXIT_OK
    (js,) = tmp_path.glob("survey_*.json")
    rep = json.loads(js.read_text())
    assert rep["lambda_grid"] == [-2.0, 0.5, 3.0]
    (csv,) = tmp_path.glob("survey_*.csv")
    assert csv.read_text().startswith(f"# starkspec {__version__} config_hash={rep['config_hash']}")
    assert len(list(tmp_path.glob("survey_*.svg"))) == 3


def test_survey_rerun_from_report_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ("survey", "--potential", "resonant", "--lambda", "0,1", "--Xi", "1e3", "--csv")
    assert run(a, *args) == EXIT_OK
    (rep,) = a.glob("survey_*.json")
    assert main(["survey", "--config", str(rep), "--csv", "--out", str(b)]) == EXIT_OK
    for f in a.iterdir():
        assert (b / f.name).read_bytes() == f.read_bytes()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"potential": "power_law", "lambda": [1.0], "Xi": 1e3,
                               "no_subordinacy": True, "subordinacy": False}))
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["survey", "--config", str(cfg), "--out", str(out1)]) == EXIT_OK
    rep = json.loads(next(out1.glob("*.json")).read_text())
    assert rep["config"]["subordinacy"] is False and rep["config"]["Xi"] == 1000.0
    assert main(["survey", "--config", str(cfg), "--Xi", "2e3", "--out", str(out2)]) == EXIT_OK
    rep2 = json.loads(next(out2.glob("*.json")).read_text())
    assert rep2["config"]["Xi"] == 2000.0


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["survey", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    assert main(["survey", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("STARKSPEC_OUT", str(tmp_path))
    assert main(["trajectory", "--potential", "zero", "--Xi", "50"]) == EXIT_OK
    assert len(list(tmp_path.glob("trajectory_*.csv"))) == 1


def test_all_failed_survey_exits_1(tmp_path):
    qfile = tmp_path / "q.csv"
    qfile.write_text("x,q\n0,0\n10,0.1\n")
    code = main(["survey", "--potential-file", str(qfile), "--lambda", "0", "--Xi", "1e3",
                 "--out", str(tmp_path / "o")])
    assert code == 1


def test_trajectory_dump(tmp_path):
    assert run(tmp_path, "trajectory", "--potential", "zero", "--lambda", "0", "--Xi", "1e3") == EXIT_OK
    (path,) = tmp_path.glob("trajectory_*.csv")
    header, data = read_csv(path)
    assert header == ["xi", "logR", "theta", "V", "b", "sigma", "gamma"]
    assert data.shape[1] == 7
    assert np.sum(np.abs(np.diff(data[:, 1]))) <= 5.0 / 72.0
    first = path.read_bytes()
    assert run(tmp_path, "trajectory", "--potential", "zero", "--lambda", "0", "--Xi", "1e3") == EXIT_OK
    assert path.read_bytes() == first
    assert run(tmp_path, "trajectory", "--lambda", "0,1") == EXIT_USAGE


def test_tails_lemma13(tmp_path, capsys):
    assert run(tmp_path, "tails", "--kind", "lemma13", "--N", "100", "--Xi-max", "1e5") == EXIT_OK
    (path,) = tmp_path.glob("tails_*.csv")
    header, data = read_csv(path)
    assert header == ["N", "re", "im", "abs", "truncation_error"]
    assert data[0, 3] <= 2 * 100 ** (-2 / 3)
    capsys.readouterr()
    assert run(tmp_path, "tails", "--p", "-2", "--N", "10", "--Xi-max", "1e4") == EXIT_OK
    assert run(tmp_path, "tails", "--N", "100,1000,10000") == EXIT_OK
    out = capsys.readouterr().out
    slope = float(out.split("fitted_exponent=")[-1].split()[0])
    assert slope <= -1 / 3
    assert run(tmp_path, "tails", "--N", "100", "--Xi-max", "200") == EXIT_USAGE


def test_tails_cubic_phase(tmp_path, capsys):
    assert run(tmp_path, "tails", "--kind", "cubic_phase", "--lambda", "1.3",
               "--N", "1e3,1e4,1e5") == EXIT_OK
    slope = float(capsys.readouterr().out.split("fitted_exponent=")[1].split()[0])
    assert slope <= -0.9 + 5 / 6 + 0.05
    assert run(tmp_path, "tails", "--kind", "cubic_phase", "--lambda", "0") == EXIT_USAGE


def test_sset(tmp_path):
    assert run(tmp_path, "sset", "--potential", "zero", "--lambda", "1", "--N", "100") == EXIT_OK
    doc = json.loads(next(tmp_path.glob("sset_*.json")).read_text())
    rec = doc["records"]["1.0"][0]
    assert rec["phi_abs"] == 0 and rec["mplus_estimate"] == 0
    out = tmp_path / "pl"
    assert main(["sset", "--potential", "power_law", "--lambda", "1", "--N", "100,200,400",
                 "--out", str(out)]) == EXIT_OK
    doc = json.loads(next(out.glob("sset_*.json")).read_text())
    m = [r["mplus_estimate"] for r in doc["records"]["1.0"]]
    assert all(abs(b - a) <= 0.2 * a for a, b in zip(m, m[1:]))
    assert run(tmp_path, "sset", "--potential", "weierstrass_smooth") == EXIT_USAGE


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "starkspec", "presets"], capture_output=True, text=True)
    assert r.returncode == 0 and "power_law" in r.stdout
