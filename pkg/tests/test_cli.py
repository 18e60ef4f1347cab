import csv
import json

import pytest

from relay_aoi.cli import config_hash, main


@pytest.fixture(autouse=True)
def _in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def _write(path, obj):
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


EX1 = {"source_arrivals": [2, 6, 7, 11, 13], "relay_arrivals": [1, 4, 9, 10, 15], "d": 1, "d_bar": 2, "T": 19}
EX2 = {**EX1, "source_arrivals": [0, 4, 4, 9, 13], "relay_arrivals": [1, 3, 6, 10, 12], "T": 16}


def test_solve_example1(tmp_path, capsys):
    assert main(["solve", _write(tmp_path / "ex1.json", EX1), "--check", "--greedy",
                 "--age-csv", str(tmp_path / "age.csv")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["x_star"] == [6.5, 6.5, 6, 6, 6, 4]
    assert out["branch"] == "AmendedAtN0" and out["n0"] == 3
    assert out["check"]["ok"] and out["check"]["gap"] <= 1e-6
    assert out["greedy"]["area"] >= out["area"]
    assert (tmp_path / "age.csv").read_text().startswith("time,age")
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert set(man) >= {"command_line", "config_hash", "artifact_version", "seeds", "outputs", "wall_clock_seconds"}


def test_solve_example2_small_horizon(tmp_path, capsys):
    assert main(["solve", _write(tmp_path / "ex2.json", EX2)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["branch"] == "SmallHorizon" and out["x_star"] == [5, 6, 6, 6, 6, 3]


def test_solve_empty_arrivals(tmp_path, capsys):
    bad = {**EX1, "source_arrivals": [], "relay_arrivals": []}
    assert main(["solve", _write(tmp_path / "e.json", bad)]) == 2
    assert "invalid instance" in capsys.readouterr().err


def test_solve_malformed_json(tmp_path, capsys):
    assert main(["solve", _write(tmp_path / "m.json", '{"d": 1,\n  "T": }')]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_solve_infeasible_lists_conditions(tmp_path, capsys):
    bad = {**EX1, "T": 10}
    assert main(["solve", _write(tmp_path / "i.json", bad)]) == 2
    err = capsys.readouterr().err
    assert "invalid instance (infeasible)" in err
    assert "i=1: T >= s_i + (N-i+1)(d+dbar) (10 < 17)" in err


def test_missing_file(capsys):
    assert main(["solve", "nope.json"]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_trace_two_run_instance(tmp_path, capsys):
    path = _write(tmp_path / "f.json", {"source_arrivals": [3, 10, 12], "d": 4, "T": 20})
    assert main(["trace", path]) == 0
    out = capsys.readouterr().out
    assert "run 1: i1=2, value 9" in out and "run 2: i2=4" in out


def test_trace_small_horizon_and_amendment(tmp_path, capsys):
    assert main(["trace", _write(tmp_path / "a.json", EX2)]) == 0
    assert "closed-form branch SmallHorizon, no balancing runs" in capsys.readouterr().out
    assert main(["trace", _write(tmp_path / "b.json", EX1)]) == 0
    assert "amendment: n0=3" in capsys.readouterr().out


def test_simulate_csv_deterministic(tmp_path):
    args = ["simulate", "--d", "0.25", "--dbar", "0.25", "--horizon", "200", "--reps", "5", "--seed", "3",
            "--sweep", "0.5:1.0:0.5"]
    assert main(args + ["--out", str(tmp_path / "a" / "r.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b" / "r.csv"), "--workers", "2"]) == 0
    a = (tmp_path / "a" / "r.csv").read_bytes()
    assert a == (tmp_path / "b" / "r.csv").read_bytes()
    rows = list(csv.DictReader(a.decode().splitlines()))
    assert list(rows[0]) == ["d_plus_dbar", "policy", "mean_aoi", "std_aoi", "mean_rate", "lower_bound",
                             "reps", "horizon", "seed"]
    assert len(rows) == 4
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seeds"] == [3]


def test_simulate_degenerate_horizon_exit_code(capsys):
    assert main(["simulate", "--d", "1", "--dbar", "1", "--horizon", "1", "--reps", "1"]) == 2


def test_reproduce_offline_goldens(tmp_path, capsys):
    out = tmp_path / "res"
    assert main(["reproduce", "offline_examples", "--out-dir", str(out)]) == 0
    ex1 = json.loads((out / "example1.json").read_text())
    assert ex1["x_e"] == [6.5, 6.5, 5.66666666667, 5.66666666667, 5.66666666667, 5]
    assert ex1["x_star"] == [6.5, 6.5, 6, 6, 6, 4]
    assert ex1["greedy"]["schedule"]["source_tx"] == [2, 6, 9, 12, 15]
    assert json.loads((out / "example2_T16.json").read_text())["x_star"] == [5, 6, 6, 6, 6, 3]
    t18 = json.loads((out / "example2_T18.json").read_text())
    assert t18["x_e"] == [5.8] * 5 + [5] and t18["x_star"] == [5, 6, 6, 6, 6, 5]
    assert (out / "example1_age.svg").read_text().lstrip().startswith(("<?xml", "<svg"))
    assert (out / "manifest.json").exists()
    # a second run is byte-identical
    first = (out / "example1.json").read_bytes()
    assert main(["reproduce", "offline_examples", "--out-dir", str(out)]) == 0
    assert (out / "example1.json").read_bytes() == first


def test_reproduce_online_sweep_lower_bound_column(tmp_path):
    out = tmp_path / "sw"
    assert main(["reproduce", "online_sweep", "--out-dir", str(out), "--reps", "2", "--horizon", "50"]) == 0
    rows = list(csv.DictReader((out / "online_sweep.csv").read_text().splitlines()))
    lb = [float(r["lower_bound"]) for r in rows if r["policy"] == "BestEffortUniform"]
    s = [float(r["d_plus_dbar"]) for r in rows if r["policy"] == "BestEffortUniform"]
    assert lb == sorted(lb)
    assert all(abs(b - max(0.5 + x, 1.5 * x)) < 1e-9 for b, x in zip(lb, s))
    assert (out / "online_sweep.svg").exists()


def test_config_hash_stable():
    assert config_hash({"a": 1, "b": 0.1}) == config_hash({"b": 0.1, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
