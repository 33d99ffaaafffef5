"""Benchmark driver: sweep (method, sample size, budget excess, run) cells,
evaluate every dispatch on a shared out-of-sample test set, and summarize.

Training data are regenerated per cell from (master_seed, run) keyed
streams, so all methods and budget points inside one run see identical
samples and results are reproducible cell by cell regardless of worker
scheduling.
"""

from __future__ import annotations

import csv
import json
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .lp import SolverConfig
from .grid import NetworkModel, WindFarm, build_network, load_grid
from .uncertainty import Context
from .datagen import (FORECAST_CORR, default_pool, generate_joint_samples,
                      generate_test_set, load_pool)
from .methods import MethodConfig, solve_method
from .evaluate import DEFAULT_SHED_COST, DEFAULT_SPILL_COST, evaluate

RESULT_FIELDS = [
    "method", "n", "rho_excess", "run", "status", "objective",
    "expected_cost", "cost_std", "violation_prob", "chance_violation_prob",
    "reserve_cost", "alpha", "rho_cc", "rho_cost", "rho_min_cc", "rho_min_cost",
    "build_time", "solve_time", "eval_time", "n_vars", "n_rows", "error",
]


class ExperimentError(ValueError):
    """Unusable experiment configuration."""


@dataclass
class ExperimentConfig:
    grid_file: str
    context: list[float]
    methods: list[str] = field(default_factory=lambda: ["drotrimm", "drow", "scena"])
    n_list: list[int] = field(default_factory=lambda: [100])
    rho_excess_list: list[float] = field(default_factory=lambda: [0.0])
    runs: int = 1
    eps: float = 0.1
    test_size: int = 1000
    master_seed: int = 1
    pool_file: str | None = None
    capacities: list[float] | None = None  # overrides the grid file farms
    shed_cost: float = DEFAULT_SHED_COST
    spill_cost: float = DEFAULT_SPILL_COST
    context_scale: float = 1.0
    rho_mode: str = "shared_excess"
    forecast_corr: float = FORECAST_CORR
    workers: int = 1
    solver_method: str = "highs-ipm"

    def __post_init__(self):
        if not self.methods:
            raise ExperimentError("at least one method required")
        if self.runs < 1 or self.test_size < 1:
            raise ExperimentError("runs and test_size must be positive")
        if not self.n_list or min(self.n_list) < 1:
            raise ExperimentError("n_list must contain positive sizes")
        if not self.rho_excess_list or min(self.rho_excess_list) < 0:
            raise ExperimentError("rho_excess_list must be nonnegative")
        if not (0 < self.eps < 1):
            raise ExperimentError("eps must lie in (0, 1)")
        if not 0.0 <= self.forecast_corr <= 1.0:
            raise ExperimentError("forecast_corr must lie in [0, 1]")
        if self.workers < 1:
            raise ExperimentError("workers must be positive")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            doc = json.load(fh)
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ExperimentError(f"bad config field: {exc}") from exc


def resolve_network(cfg: ExperimentConfig, base_dir: Path) -> NetworkModel:
    grid_path = Path(cfg.grid_file)
    if not grid_path.is_absolute():
        grid_path = base_dir / grid_path
    network = load_grid(grid_path)
    if cfg.capacities is not None:
        if len(cfg.capacities) != network.n_farms:
            raise ExperimentError("capacity override length mismatch")
        farms = tuple(WindFarm(id=w.id, bus=w.bus, capacity=c)
                      for w, c in zip(network.wind_farms, cfg.capacities))
        network = build_network(network.buses, network.lines,
                                network.generators, farms, network.slack_bus)
    if len(cfg.context) != network.n_farms:
        raise ExperimentError("context length does not match wind farm count")
    return network


def _task_cells(cfg: ExperimentConfig) -> list[tuple[str, int, float, int]]:
    cells = []
    for method in cfg.methods:
        # scena has no ambiguity radius, so it runs once per (n, run)
        rhos = [0.0] if method == "scena" else list(cfg.rho_excess_list)
        for n in cfg.n_list:
            for rho in rhos:
                for run in range(cfg.runs):
                    cells.append((method, n, rho, run))
    return cells


def _run_cell(payload) -> dict:
    (network, pool, cfg_dict, method, n, rho_excess, run, test_omega) = payload
    cfg = ExperimentConfig(**cfg_dict)
    row = {k: "" for k in RESULT_FIELDS}
    row.update(method=method, n=n, rho_excess=rho_excess, run=run)
    context = Context.from_capacities(np.asarray(cfg.context), network.capacities)
    try:
        samples = generate_joint_samples(pool, network.capacities, n,
                                         seed=cfg.master_seed, run=run,
                                         forecast_corr=cfg.forecast_corr)
        mcfg = MethodConfig(method=method, eps=cfg.eps, rho_excess=rho_excess,
                            rho_mode=cfg.rho_mode, context_scale=cfg.context_scale,
                            solver=SolverConfig(method=cfg.solver_method))
        sol = solve_method(network, samples, context, mcfg)
        t0 = time.perf_counter()
        report = evaluate(network, sol, context, test_omega,
                          shed_cost=cfg.shed_cost, spill_cost=cfg.spill_cost)
        eval_time = time.perf_counter() - t0
        row.update(status="ok", objective=sol.objective,
                   expected_cost=report.expected_cost, cost_std=report.cost_std,
                   violation_prob=report.violation_prob,
                   chance_violation_prob=report.chance_violation_prob,
                   reserve_cost=report.reserve_cost,
                   alpha=sol.meta.get("alpha", ""),
                   rho_cc=sol.meta.get("rho_cc", ""),
                   rho_cost=sol.meta.get("rho_cost", ""),
                   rho_min_cc=sol.meta.get("rho_min_cc", ""),
                   rho_min_cost=sol.meta.get("rho_min_cost", ""),
                   build_time=sol.build_time, solve_time=sol.solve_time,
                   eval_time=eval_time, n_vars=sol.meta.get("n_vars", ""),
                   n_rows=sol.meta.get("n_rows", ""))
    except Exception as exc:  # keep the sweep alive, record the cell failure
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path,
                   base_dir: str | Path = ".") -> list[dict]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = Path(base_dir)
    network = resolve_network(cfg, base)
    if cfg.pool_file:
        pool_path = Path(cfg.pool_file)
        pool = load_pool(pool_path if pool_path.is_absolute() else base / pool_path)
    else:
        pool = default_pool()
    context_f = np.asarray(cfg.context, dtype=np.float64)
    test_omega = generate_test_set(context_f, network.capacities, cfg.test_size,
                                   seed=cfg.master_seed + 777)
    cells = _task_cells(cfg)
    payloads = [(network, pool, asdict(cfg), m, n, r, run, test_omega)
                for (m, n, r, run) in cells]
    t0 = time.perf_counter()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool_exec:
            rows = list(pool_exec.map(_run_cell, payloads, chunksize=1))
    else:
        rows = [_run_cell(p) for p in payloads]
    wall = time.perf_counter() - t0

    results_path = out / "results.csv"
    with open(results_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    manifest = {
        "config": asdict(cfg),
        "n_cells": len(cells),
        "wall_time_s": wall,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
        },
        "n_failed": sum(1 for r in rows if r["status"] != "ok"),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return rows


# -- summaries ----------------------------------------------------------------

SUMMARY_FIELDS = ["method", "n", "rho_excess", "cells", "mean_cost", "std_cost",
                  "mean_violation", "max_violation", "mean_objective",
                  "mean_solve_time"]


def load_results(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(rows: list[dict], eps: float = 0.1) -> tuple[list[dict], list[dict]]:
    """Per-(method, n, rho_excess) aggregates and the per-(method, n) pick of
    the smallest budget whose average out-of-sample violation is within eps."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        if r["status"] != "ok":
            continue
        key = (r["method"], int(float(r["n"])), float(r["rho_excess"]))
        groups.setdefault(key, []).append(r)
    summary = []
    for (method, n, rho), grp in sorted(groups.items()):
        costs = np.array([float(g["expected_cost"]) for g in grp])
        viol = np.array([float(g["violation_prob"]) for g in grp])
        summary.append({
            "method": method, "n": n, "rho_excess": rho, "cells": len(grp),
            "mean_cost": float(costs.mean()),
            "std_cost": float(costs.std(ddof=1)) if len(grp) > 1 else 0.0,
            "mean_violation": float(viol.mean()),
            "max_violation": float(viol.max()),
            "mean_objective": float(np.mean([float(g["objective"]) for g in grp])),
            "mean_solve_time": float(np.mean([float(g["solve_time"]) for g in grp])),
        })
    picks = []
    for (method, n) in sorted({(s["method"], s["n"]) for s in summary}):
        cand = [s for s in summary if s["method"] == method and s["n"] == n]
        cand.sort(key=lambda s: s["rho_excess"])
        ok = [s for s in cand if s["mean_violation"] <= eps]
        chosen = ok[0] if ok else None
        picks.append({
            "method": method, "n": n, "reliable": bool(ok),
            "rho_excess": chosen["rho_excess"] if chosen else "",
            "mean_cost": chosen["mean_cost"] if chosen else "",
            "std_cost": chosen["std_cost"] if chosen else "",
            "mean_violation": chosen["mean_violation"] if chosen else "",
        })
    return summary, picks


def write_summary(summary: list[dict], picks: list[dict], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        writer.writeheader()
        writer.writerows(summary)
    with open(out / "picks.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["method", "n", "reliable",
                                                "rho_excess", "mean_cost",
                                                "std_cost", "mean_violation"])
        writer.writeheader()
        writer.writerows(picks)


def format_summary(summary: list[dict]) -> str:
    lines = [f"{'method':10} {'n':>5} {'rho_x':>8} {'cost':>12} {'std':>10} "
             f"{'viol':>7} {'cells':>5}"]
    for s in summary:
        lines.append(f"{s['method']:10} {s['n']:>5} {s['rho_excess']:>8.3g} "
                     f"{s['mean_cost']:>12.1f} {s['std_cost']:>10.1f} "
                     f"{s['mean_violation']:>7.3f} {s['cells']:>5}")
    return "\n".join(lines)
