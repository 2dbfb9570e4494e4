import json

import pytest

from nlsform.cli import main


def write(path, payload):
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload, indent=2))
    return str(path)


def test_reduce_writes_outputs_and_manifest(tmp_path):
    cfg = write(tmp_path / "r.json", {"p": 1, "M": 4, "K": 2, "steps": 1, "taylor_order": 2, "max_degree": 6,
                                      "out": str(tmp_path / "red")})
    assert main(["reduce", cfg]) == 0
    man = json.loads((tmp_path / "red" / "manifest.json").read_text())
    assert man["command"] == "reduce" and man["status"] == "ok" and man["schema_version"] == 1
    rep = json.loads((tmp_path / "red" / "report.json").read_text())
    assert len(rep["steps"]) == 1


def test_reduce_steps_zero_only_resplits(tmp_path):
    assert main(["reduce", "--p", "1", "--M", "3", "--K", "1", "--steps", "0", "--out", str(tmp_path / "z")]) == 0
    red = json.loads((tmp_path / "z" / "reduced.json").read_text())
    assert {p["tag"] for p in red["pieces"]} <= {"resonant", "nonresonant"}
    assert json.loads((tmp_path / "z" / "report.json").read_text())["steps"] == []


def test_K_from_delta(tmp_path):
    assert main(["reduce", "--p", "1", "--M", "3", "--N", "16", "--delta", "0.5", "--steps", "0",
                 "--out", str(tmp_path / "d")]) == 0
    assert json.loads((tmp_path / "d" / "manifest.json").read_text())["config"]["K"] == pytest.approx(4.0)


def test_config_errors_exit_2(tmp_path, capsys):
    bad = write(tmp_path / "bad.json", '{"p": 1,\n "M": 4,,\n}')
    assert main(["reduce", bad]) == 2
    assert "bad.json:2" in capsys.readouterr().err
    unknown = write(tmp_path / "u.json", '{\n  "p": 1,\n  "M": 4,\n  "K": 2,\n  "colour": 3\n}')
    assert main(["reduce", unknown]) == 2
    assert "u.json:5" in capsys.readouterr().err
    assert main(["reduce", "--p", "1", "--M", "3"]) == 2
    assert main(["simulate", "--M", "64", "--dt", "0.01"]) == 2
    assert main(["ds-scan", "--samples", "0", "--out", str(tmp_path / "x.json")]) == 2


def test_verify_cubic_and_negative_control(tmp_path):
    assert main(["verify-cubic", "--M", "3", "--out", str(tmp_path / "v.json")]) == 0
    assert json.loads((tmp_path / "v.json").read_text())["passed"]
    assert main(["verify-cubic", "--M", "3", "--corrupt", "--out", str(tmp_path / "c.json")]) == 1
    assert main(["verify-cubic", "--M", "20", "--out", str(tmp_path / "big.json")]) == 2


def test_simulate_is_deterministic(tmp_path):
    args = ["simulate", "--M", "8", "--T", "0.05", "--dt", "0.001", "--record-every", "10", "--deterministic"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()


def test_simulate_with_reduced_and_seeds(tmp_path):
    red = tmp_path / "red"
    assert main(["reduce", "--p", "1", "--M", "8", "--K", "2", "--steps", "0", "--out", str(red)]) == 0
    out = tmp_path / "sim"
    assert main(["simulate", "--M", "8", "--T", "0.02", "--dt", "0.001", "--record-every", "2", "--N", "4",
                 "--reduced", str(red / "reduced.json"), "--seeds", "1", "2", "--fit", "--out", str(out)]) == 0
    for sd in (1, 2):
        assert (out / f"series_seed{sd}.csv").exists()
        assert (out / f"growth_seed{sd}.json").exists()
    first_row = (out / "series_seed1.csv").read_text().splitlines()[1].split(",")
    assert all(v != "" for v in first_row)
    assert main(["simulate", "--M", "16", "--T", "0.01", "--reduced", str(red / "reduced.json"),
                 "--out", str(tmp_path / "bad")]) == 2


def test_simulate_abort_exit_3(tmp_path):
    cfg = write(tmp_path / "s2.json", {"M": 4, "dt": 0.1, "T": 5.0, "record_every": 1,
                                       "ic": {"kind": "random", "amplitude": 200.0}})
    assert main(["simulate", cfg, "--out", str(tmp_path / "ab2")]) == 3
    man = json.loads((tmp_path / "ab2" / "manifest.json").read_text())
    assert man["partial"] and man["status"].startswith("aborted")


def test_ds_scan_seed_determinism_and_growth_report(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["ds-scan", "--range", "16", "--samples", "500", "--seed", "3", "--out", str(path)]) == 0
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert ra["per_degree"] == rb["per_degree"]
    assert ra["degree4_exhaustive"] == pytest.approx(1.890625)

    sim = tmp_path / "sim"
    assert main(["simulate", "--M", "8", "--T", "0.2", "--dt", "0.001", "--record-every", "10", "--out", str(sim)]) == 0
    g = tmp_path / "g.json"
    assert main(["growth-report", str(sim / "series.csv"), "--out", str(g)]) == 0
    assert "alpha" in json.loads(g.read_text())
    assert main(["growth-report", str(tmp_path / "missing.csv"), "--out", str(g)]) == 2
