import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from wealthdyn.cli import main
from wealthdyn.forward import Trajectory
from wealthdyn.output import read_trajectory_csv, svg_text, trajectory_csv_text, write_trajectory_csv

from conftest import CONFIGS, REFERENCE_ECONOMY

SVG_NS = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def polylines(path):
    root = ET.parse(path).getroot()
    lines = {}
    for el in root.iter(f"{SVG_NS}polyline"):
        pts = [tuple(map(float, p.split(","))) for p in el.get("points").split()]
        lines[el.get("data-category")] = np.array(pts)
    return lines


def test_simulate_writes_csv_and_svg(tmp_path, capsys):
    csv, svg = tmp_path / "traj.csv", tmp_path / "traj.svg"
    code, out, err = run(capsys, "simulate", "--config", REFERENCE_ECONOMY, "--out", csv, "--svg", svg)
    assert code == 0 and err == ""
    lines = csv.read_text().splitlines()
    assert len(lines) == 401
    assert lines[0] == "t,Producer,Consumer,ControlMechanism"
    assert lines[1] == "0,500.000000,1500.000000,98000.000000"
    assert "Consumer" in out
    poly = polylines(svg)
    assert list(poly) == ["Producer", "Consumer", "ControlMechanism"]
    assert all(len(p) == 400 for p in poly.values())
    # svg y grows downwards: higher wealth, smaller y
    assert poly["Consumer"][-1, 1] < poly["Producer"][-1, 1]
    assert not list(tmp_path.glob("*.tmp*")) and sorted(p.name for p in tmp_path.iterdir()) == ["traj.csv", "traj.svg"]


def test_no_interaction_control_line_is_flat(tmp_path, capsys):
    csv, svg = tmp_path / "t.csv", tmp_path / "t.svg"
    params = CONFIGS / "params-no-interactions.json"
    code, _, _ = run(capsys, "simulate", "--config", REFERENCE_ECONOMY, "--out", csv, "--svg", svg, "--params", params)
    assert code == 0
    cm = polylines(svg)["ControlMechanism"]
    assert np.all(cm[:, 1] == cm[0, 1])
    _, _, wealth = read_trajectory_csv(csv)
    assert np.all(wealth[:, 2] == 98000)


def test_outputs_are_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "simulate", "--config", REFERENCE_ECONOMY, "--out", tmp_path / f"{name}.csv", "--svg", tmp_path / f"{name}.svg")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_validate(tmp_path, capsys):
    code, out, err = run(capsys, "validate", "--config", REFERENCE_ECONOMY)
    assert code == 0 and out.startswith("valid")
    doc = json.loads(REFERENCE_ECONOMY.read_text())
    doc["categories"][0]["initial_wealth"] = 400
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(doc))
    code, out, err = run(capsys, "validate", "--config", broken)
    assert code != 0
    assert len(err.splitlines()) == 1 and err.startswith("error:") and "conservation" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--config", "missing.json", "--out", "x.csv"],
        ["simulate", "--config", REFERENCE_ECONOMY],
        ["frobnicate"],
        ["simulate", "--config", REFERENCE_ECONOMY, "--out", REFERENCE_ECONOMY],
        ["kinetic", "--model", "no-saving", "--agents", "10", "--exchanges", "5", "--seed", "1", "--lambda", "0.3", "--out", "k.json"],
        ["price", "--config", REFERENCE_ECONOMY, "--params", CONFIGS / "params-forward.json", "--at-time", "5", "--demands", "GoodA=3,Incentive=2"],
        ["price", "--config", REFERENCE_ECONOMY, "--params", CONFIGS / "params-forward.json", "--at-time", "5", "--demands", "GoodA:3"],
    ],
)
def test_every_failure_prints_one_error_line(tmp_path, capsys, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(capsys, *argv)
    assert code != 0
    lines = err.splitlines()
    assert len(lines) == 1 and lines[0].startswith("error:")


def test_price_report(capsys):
    code, out, _ = run(
        capsys,
        "price",
        "--config", REFERENCE_ECONOMY,
        "--params", CONFIGS / "params-inverse-solution.json",
        "--at-time", 50,
        "--demands", "GoodA=30,GoodB=60",
        "--quoted", "GoodA=100,GoodB=80",
    )
    assert code == 0
    rep = json.loads(out)
    h = rep["hyperplane_constant"]
    w = rep["wealth"]
    assert rep["pair"] == "Consumer->Producer" and rep["beta"] == pytest.approx(0.44265)
    assert h == pytest.approx(0.44265 * w["Producer"] * w["Consumer"] / 1e5, rel=1e-9)
    canon = rep["canonical_prices"]
    assert 30 * canon["GoodA"] + 60 * canon["GoodB"] == pytest.approx(h, rel=1e-6)
    tau = rep["stability_taxes"]
    assert tau["GoodA"] == tau["GoodB"] == pytest.approx((h - 7800) / 90, abs=1e-6)
    assert rep["feasible"] is True


def test_kinetic_command(tmp_path, capsys):
    out, hist = tmp_path / "k.json", tmp_path / "h.csv"
    code, stdout, _ = run(
        capsys, "kinetic", "--model", "global-saving", "--agents", 100, "--exchanges", 20000, "--seed", 3, "--lambda", 0.5, "--out", out, "--hist", hist, "--bins", 10
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["model"] == "global-saving" and doc["agents"] == 100 and doc["seed"] == 3
    assert doc["mean"] == pytest.approx(1.0)
    rows = hist.read_text().splitlines()
    assert rows[0] == "bin_lower,bin_upper,count" and len(rows) == 11
    assert sum(int(r.split(",")[2]) for r in rows[1:]) == 100


def test_solve_then_simulate_reproduces(tmp_path, capsys):
    sol, csv = tmp_path / "sol.json", tmp_path / "traj.csv"
    code, _, _ = run(capsys, "solve", "--config", REFERENCE_ECONOMY, "--tol", 0.01, "--starts", 4, "--seed", 42, "--out", sol)
    assert code == 0
    doc = json.loads(sol.read_text())
    assert {"parameters", "residual_norm", "final_state", "seed", "iterations"} <= set(doc)
    code, _, _ = run(capsys, "simulate", "--config", REFERENCE_ECONOMY, "--params", sol, "--out", csv)
    assert code == 0
    names, _, wealth = read_trajectory_csv(csv)
    for n, v in zip(names, wealth[-1]):
        assert v == pytest.approx(doc["final_state"][n], abs=2e-6)


def test_solve_failure_still_writes_document(tmp_path, capsys):
    sol = tmp_path / "sol.json"
    code, _, err = run(capsys, "solve", "--config", REFERENCE_ECONOMY, "--tol", 1e-12, "--starts", 1, "--seed", 1, "--max-iterations", 2, "--out", sol)
    assert code == 1 and err.startswith("error: no convergence")
    assert "parameters" in json.loads(sol.read_text())


def test_csv_round_trip_and_edge_lengths(tmp_path, ref_config):
    wealth = np.array([[500.1234564, 1500.0, 97999.8765436]])
    one = Trajectory(wealth, ref_config)
    path = tmp_path / "one.csv"
    write_trajectory_csv(one, path)
    assert len(path.read_text().splitlines()) == 2
    names, times, back = read_trajectory_csv(path)
    assert names == ref_config.names and list(times) == [0]
    np.testing.assert_allclose(back, wealth, atol=5e-7)
    with pytest.raises(ValueError):
        trajectory_csv_text(Trajectory(np.zeros((0, 3)), ref_config))


def test_constant_trajectory_svg_is_flat(ref_config):
    traj = Trajectory(np.tile(ref_config.initial_wealth, (5, 1)), ref_config)
    root = ET.fromstring(svg_text(traj))
    for el in root.iter(f"{SVG_NS}polyline"):
        ys = {p.split(",")[1] for p in el.get("points").split()}
        assert len(ys) == 1


def test_module_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "wealthdyn", "validate", "--config", str(REFERENCE_ECONOMY)],
        capture_output=True,
        text=True,
        env=dict(os.environ),
    )
    assert out.returncode == 0 and out.stdout.startswith("valid")
