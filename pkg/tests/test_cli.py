"""End-to-end tests for the radalloc command line."""

import csv
import json
import math

import pytest

from radalloc import LayoutDistribution, random_scenario
from radalloc.cli import main

LAYOUT = LayoutDistribution(n_tx=3, n_rx=3, n_targets=2)


@pytest.fixture(scope="module")
def scenario_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "scene.json"
    random_scenario(LAYOUT, 11).to_json(path)
    return path


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_allocate_prints_full_result(scenario_file, capsys):
    code, doc = run_json(capsys, ["allocate", str(scenario_file), "--k", "joint"])
    assert code == 0
    assert doc["kind"] == "joint"
    assert len(doc["p"]) == 3 and len(doc["w"]) == 3
    assert math.isclose(sum(doc["p"]), 1.0, rel_tol=1e-9)
    assert math.isclose(sum(doc["w"]), 3.0e6, rel_tol=1e-9)
    assert doc["converged"] is True
    assert math.isclose(doc["sqrt_cost_m"], math.sqrt(doc["achieved_cost"]),
                        rel_tol=1e-12)
    assert doc["certificate"]["kind"] == "joint"
    assert doc["certificate_gap"] >= 1.0 - 1e-9
    assert doc["iterations"] == sorted(doc["iterations"], reverse=True)


def test_allocate_uniform_and_no_certificate(scenario_file, capsys):
    code, doc = run_json(capsys, ["allocate", str(scenario_file),
                                  "--k", "uniform"])
    assert code == 0
    assert "certificate" not in doc
    assert len(set(doc["p"])) == 1 and len(set(doc["w"])) == 1

    code, doc = run_json(capsys, ["allocate", str(scenario_file),
                                  "--k", "power", "--no-certificate"])
    assert code == 0
    assert "certificate" not in doc


def test_allocate_out_file(scenario_file, tmp_path, capsys):
    out = tmp_path / "alloc.json"
    code = main(["allocate", str(scenario_file), "--k", "power",
                 "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out == ""
    doc = json.loads(out.read_text())
    assert doc["kind"] == "power"


def test_bound_is_below_allocate_cost(scenario_file, capsys):
    costs = {}
    bounds = {}
    for kind in ("power", "bandwidth", "joint"):
        code, doc = run_json(capsys, ["allocate", str(scenario_file),
                                      "--k", kind, "--no-certificate"])
        assert code == 0
        costs[kind] = doc["achieved_cost"]
        code, doc = run_json(capsys, ["bound", str(scenario_file), "--k", kind])
        assert code == 0
        assert doc["kind"] == kind
        assert doc["method"]["relaxation"] == "single-constraint support enumeration"
        assert len(doc["per_target_relaxed"]) == LAYOUT.n_targets
        bounds[kind] = doc["problem_bound"]
    for kind in costs:
        assert 0 < bounds[kind] <= costs[kind] * (1 + 1e-9)


def test_budget_flags_change_the_answer(scenario_file, capsys):
    base = ["allocate", str(scenario_file), "--k", "power", "--no-certificate"]
    _, doc1 = run_json(capsys, base)
    _, doc2 = run_json(capsys, base + ["--total-power", "2.0"])
    assert math.isclose(sum(doc2["p"]), 2.0, rel_tol=1e-9)
    assert math.isclose(doc2["achieved_cost"], doc1["achieved_cost"] / 2.0,
                        rel_tol=1e-9)


def test_montecarlo_writes_csv_and_plot_script(tmp_path, capsys):
    out = tmp_path / "mc.csv"
    cfg = {"n_tx": 3, "n_rx": 3, "n_targets": 2, "trials": 2,
           "snr_grid_db": [0.0, 5.0], "policies": ["uniform", "joint"]}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    code = main(["montecarlo", "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "wrote 8 records" in text
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8
    assert {r["policy"] for r in rows} == {"uniform", "joint"}
    script = tmp_path / "mc_plot.py"
    assert script.exists()
    compile(script.read_text(), str(script), "exec")


def test_montecarlo_overrides_and_determinism(tmp_path, capsys):
    argv = ["montecarlo", "--trials", "1", "--seed", "3",
            "--policies", "uniform,power"]
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()
    with open(out1, newline="") as fh:
        rows = list(csv.DictReader(fh))
    # default grid has five SNR points and we asked for two policies
    assert len(rows) == 10


def test_validate_generated_scene_passes(capsys):
    code = main(["validate", "--seed", "4"])
    out = capsys.readouterr().out
    assert code == 0
    lines = [ln for ln in out.splitlines() if ln]
    assert len(lines) == 13
    assert all(ln.startswith("PASS") for ln in lines)


def test_validate_scenario_file(scenario_file, capsys):
    code = main(["validate", str(scenario_file)])
    out = capsys.readouterr().out
    assert code == 0
    assert all(ln.startswith("PASS") for ln in out.splitlines() if ln)


def test_usage_errors_exit_one(capsys):
    assert main([]) == 1
    assert main(["allocate"]) == 1
    assert main(["allocate", "x.json", "--k", "sideways"]) == 1
    capsys.readouterr()


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    out = capsys.readouterr().out
    for sub in ("allocate", "bound", "montecarlo", "validate"):
        assert sub in out
    assert main(["allocate", "--help"]) == 0
    assert "schema" in capsys.readouterr().out.lower()


def test_missing_scenario_exits_two(tmp_path, capsys):
    code = main(["allocate", str(tmp_path / "nope.json"), "--k", "power"])
    err = capsys.readouterr().err
    assert code == 2
    assert "not found" in err
