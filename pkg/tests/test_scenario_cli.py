import csv
import json
import math

import pytest

from resdrift.cli import main
from resdrift.io import dumps, format_float, read_json
from resdrift.scenario import (BUNDLED, ScenarioError, load_scenario, parse_scenario)


# ------------------------------------------------------------------ serialisation
def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(1.0) == "1.0"
    assert format_float(-1e-20) == "-9.9999999999999995e-21"
    assert format_float(math.inf) == "null" and format_float(math.nan) == "null"
    for x in (0.1, 1 / 3, 2.5e-300, -7.0, 123456789.123):
        assert float(format_float(x)) == x


def test_dumps_is_valid_json():
    doc = {"a": [1, 2.0, None, True], "b": {"c": [[0.5, 1e-30]], "d": "x"}, "e": []}
    assert json.loads(dumps(doc)) == doc


@pytest.mark.parametrize("name", BUNDLED)
def test_scenario_round_trip(name):
    scn = load_scenario(name)
    again = parse_scenario(json.loads(scn.dumps()))
    assert again == scn
    assert again.dumps() == scn.dumps()


def test_unknown_keys_rejected():
    data = json.loads(load_scenario("torus_example").dumps())
    for bad in ({**data, "colour": 1},
                {**data, "integrator": {**data["integrator"], "order": 8}},
                {**data, "poincare": {**data["poincare"], "seedz": 3}},
                {**data, "path": {**data["path"], "v3": [1.0]}}):
        with pytest.raises(ScenarioError):
            parse_scenario(bad)


@pytest.mark.parametrize("patch", [{"chart": "polar"}, {"sigma": -1.0}, {"channels": 0},
                                   {"sigma": "abc"}, {"integrator": {"scheme": "euler"}}])
def test_invalid_values_rejected(patch):
    data = json.loads(load_scenario("torus_example").dumps())
    data.update(patch)
    with pytest.raises(ScenarioError):
        parse_scenario(data)


# ------------------------------------------------------------------ command line
def _write(tmp_path, name, **changes):
    data = json.loads(load_scenario(name).dumps())
    for key, value in changes.items():
        if isinstance(value, dict):
            data[key].update(value)
        else:
            data[key] = value
    f = tmp_path / f"{name}.json"
    f.write_text(json.dumps(data))
    return str(f)


def test_exit_codes(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path / "nothing")]) == 3
    assert main(["construct", "--scenario", str(tmp_path / "missing.json")]) == 3
    assert main(["construct"]) == 2
    assert main(["frobnicate", "--scenario", "torus_example"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", "path": {"v1": [0.0], "v2": [1.0]}, "extra": 1}')
    assert main(["construct", "--scenario", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text("{not json")
    assert main(["construct", "--scenario", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["verify-drift", "--scenario", "elliptic_example", "--channel", "9",
                 "--out", str(tmp_path)]) == 2
    capsys.readouterr()


def test_construct_summaries(tmp_path, capsys):
    assert main(["construct", "--scenario", "torus_example", "--out", str(tmp_path / "t")]) == 0
    assert main(["construct", "--scenario", "elliptic_example", "--out", str(tmp_path / "e")]) == 0
    t = read_json(tmp_path / "t" / "construct.json")
    e = read_json(tmp_path / "e" / "construct.json")
    assert t["kolmogorov_det"] == pytest.approx(-1.0, abs=1e-8)
    assert e["conditions"]["elliptic_admissible"] is True
    assert "kolmogorov_det = -1" in capsys.readouterr().out


def test_report_needs_every_input(tmp_path, capsys):
    out = tmp_path / "t"
    assert main(["construct", "--scenario", "torus_example", "--out", str(out)]) == 0
    assert main(["report", "--out", str(out)]) == 3
    capsys.readouterr()


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """Every command on both scenarios, twice, into separate directories."""
    base = tmp_path_factory.mktemp("cli")
    codes = {}
    for rep in ("a", "b"):
        for name in BUNDLED:
            scn = _write(base, name, poincare={"seeds": 2, "crossings": 5, "t_max": 200.0})
            out = base / rep / name
            for cmd in ("construct", "resonances", "verify-drift", "verify-gevrey", "simulate",
                        "poincare"):
                codes[rep, name, cmd] = main([cmd, "--scenario", scn, "--out", str(out)])
        codes[rep, "report"] = main(["report", "--out", str(base / rep)])
    return base, codes


def test_commands_succeed(runs):
    _, codes = runs
    for (rep, *rest), code in codes.items():
        if rest == ["report"] or rest[-1] == "verify-gevrey":
            continue
        assert code == 0, rest


def test_reruns_are_byte_identical(runs):
    base, _ = runs
    files = sorted(p.relative_to(base / "a") for p in (base / "a").rglob("*") if p.is_file())
    assert len(files) >= 15
    for f in files:
        assert (base / "a" / f).read_bytes() == (base / "b" / f).read_bytes(), f


def test_outputs_have_no_runtimes(runs):
    base, _ = runs
    for f in (base / "a").rglob("*.json"):
        assert "time_s" not in f.read_text() and "runtime" not in f.read_text()


def test_trajectory_csv(runs):
    base, _ = runs
    with open(base / "a" / "torus_example" / "trajectory_n1.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "q1", "q2", "p1", "p2", "H", "d_line"]
    body = [[float(v) for v in r] for r in rows[1:]]
    assert body[0][0] == 0.0 and body[0][3:5] == [0.0, 0.25]
    assert max(abs(r[6]) for r in body) < 1e-8
    assert max(abs(r[5] - body[0][5]) for r in body) < 1e-8


def test_poincare_csv(runs):
    base, _ = runs
    with open(base / "a" / "elliptic_example" / "poincare.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["u", "v"] and len(rows) > 1
    meta = read_json(base / "a" / "elliptic_example" / "poincare.json")
    assert meta["points"] == len(rows) - 1


def test_drift_json_and_report(runs):
    base, codes = runs
    doc = read_json(base / "a" / "torus_example" / "drift.json")
    assert [r["n"] for r in doc["drift"]] == [1, 2, 3]
    assert all(c["pass"] for c in doc["checks"].values())
    for c in doc["checks"].values():
        assert set(c) == {"value", "tolerance", "pass"}
    rep = read_json(base / "a" / "report.json")
    assert [r["criterion"] for r in rep["criteria"]] == list(range(1, 10))
    # the report exits 4 exactly when some criterion fails
    assert codes["a", "report"] == (0 if all(r["pass"] for r in rep["criteria"]) else 4)


def test_epsilon_override(tmp_path, capsys):
    out = tmp_path / "eps"
    assert main(["simulate", "--scenario", "torus_example", "--channel", "2", "--epsilon", "0.5",
                 "--out", str(out)]) == 0
    with open(out / "trajectory_n2.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    # speed eps * eps_2 * |k_perp| sets the exit time
    t_exit = float(rows[-1][0])
    delta = load_scenario("torus_example").system().delta
    assert t_exit == pytest.approx(delta * (1 - 1e-6) / (0.5 * math.exp(-8) * 8), rel=1e-6)
    capsys.readouterr()
