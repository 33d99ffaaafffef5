"""End-to-end command line flows using main(argv)."""

import json

import numpy as np
import pytest

from dro_opf.cli import main
from dro_opf.grid import save_grid
from dro_opf.uncertainty import load_samples, load_test_set

from conftest import three_bus


@pytest.fixture()
def grid_file(tmp_path):
    path = tmp_path / "grid.json"
    save_grid(three_bus(), path)
    return path


def test_gen_data_solve_evaluate_chain(tmp_path, grid_file, capsys):
    samples_path = tmp_path / "samples.csv"
    test_path = tmp_path / "test.csv"
    rc = main(["gen-data", "--grid", str(grid_file), "--n", "12",
               "--seed", "3", "--out", str(samples_path),
               "--context", "24", "--test-out", str(test_path),
               "--test-size", "30"])
    assert rc == 0
    samples = load_samples(samples_path)
    assert samples.n == 12 and samples.n_farms == 1
    omega = load_test_set(test_path)
    assert omega.shape == (30, 1)

    sol_path = tmp_path / "sol.json"
    rc = main(["solve", "--grid", str(grid_file), "--samples", str(samples_path),
               "--context", "24", "--method", "drotrimm", "--rho-excess", "1.5",
               "--lp-method", "highs", "--out", str(sol_path)])
    assert rc == 0
    sol = json.loads(sol_path.read_text())
    assert sol["method"] == "drotrimm" and sol["status"] == "optimal"
    assert "objective" in capsys.readouterr().out

    report_path = tmp_path / "report.json"
    rc = main(["evaluate", "--grid", str(grid_file), "--solution", str(sol_path),
               "--context", "24", "--test-set", str(test_path),
               "--out", str(report_path)])
    assert rc == 0
    report = json.loads(report_path.read_text())
    assert report["n_scenarios"] == 30
    assert 0.0 <= report["violation_prob"] <= 1.0


def test_run_and_summarize(tmp_path, grid_file, capsys):
    cfg = {"grid_file": grid_file.name, "context": [24.0], "n_list": [10],
           "rho_excess_list": [0.0, 2.0], "runs": 1, "test_size": 15,
           "methods": ["drow", "scena"], "master_seed": 5,
           "solver_method": "highs"}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "out"
    rc = main(["run", "--config", str(cfg_path), "--out-dir", str(out_dir)])
    assert rc == 0
    assert (out_dir / "results.csv").exists()
    assert (out_dir / "manifest.json").exists()
    assert (out_dir / "summary.csv").exists()
    printed = capsys.readouterr().out
    assert "completed 3 cells" in printed
    assert "drow" in printed and "scena" in printed

    rc = main(["summarize", "--results", str(out_dir / "results.csv"),
               "--eps", "0.2", "--out-dir", str(tmp_path / "agg")])
    assert rc == 0
    assert (tmp_path / "agg" / "picks.csv").exists()


def test_run_reports_failures_in_exit_code(tmp_path, capsys):
    grid = tmp_path / "grid.json"
    save_grid(three_bus(load3=1000.0), grid)
    cfg = {"grid_file": grid.name, "context": [24.0], "n_list": [8],
           "rho_excess_list": [0.0], "runs": 1, "test_size": 5,
           "methods": ["drow"], "solver_method": "highs"}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = main(["run", "--config", str(cfg_path),
               "--out-dir", str(tmp_path / "out")])
    assert rc == 1
    assert "1 failed" in capsys.readouterr().out


def test_context_broadcast_and_mismatch(tmp_path, grid_file):
    samples_path = tmp_path / "s.csv"
    main(["gen-data", "--grid", str(grid_file), "--n", "8",
          "--out", str(samples_path)])
    with pytest.raises(SystemExit, match="context needs"):
        main(["solve", "--grid", str(grid_file), "--samples", str(samples_path),
              "--context", "24,30", "--method", "scena",
              "--out", str(tmp_path / "x.json")])


def test_test_out_requires_context(tmp_path, grid_file):
    with pytest.raises(SystemExit, match="requires --context"):
        main(["gen-data", "--grid", str(grid_file), "--n", "8",
              "--out", str(tmp_path / "s.csv"),
              "--test-out", str(tmp_path / "t.csv")])
