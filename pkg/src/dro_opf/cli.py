"""Command line entry points: dro-opf {run,summarize,gen-data,solve,evaluate}."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .lp import SolverConfig
from .grid import load_grid
from .uncertainty import (Context, load_samples, load_test_set, save_samples,
                          save_test_set)
from .datagen import (FORECAST_CORR, default_pool, generate_joint_samples,
                      generate_test_set, load_pool)
from .methods import DispatchSolution, MethodConfig, solve_method
from .evaluate import DEFAULT_SHED_COST, DEFAULT_SPILL_COST, evaluate
from .experiment import (ExperimentConfig, format_summary, load_results,
                         run_experiment, summarize, write_summary)


def _parse_context(text: str, n_farms: int) -> np.ndarray:
    vals = [float(v) for v in text.split(",")]
    if len(vals) == 1:
        vals = vals * n_farms
    if len(vals) != n_farms:
        raise SystemExit(f"context needs 1 or {n_farms} values, got {len(vals)}")
    return np.asarray(vals)


def _cmd_gen_data(args) -> int:
    network = load_grid(args.grid)
    pool = load_pool(args.pool) if args.pool else default_pool()
    samples = generate_joint_samples(pool, network.capacities, args.n,
                                     seed=args.seed, run=args.run,
                                     forecast_corr=args.forecast_corr)
    save_samples(samples, args.out)
    print(f"wrote {samples.n} samples x {samples.n_farms} farms to {args.out}")
    if args.test_out:
        if not args.context:
            raise SystemExit("--test-out requires --context")
        f = _parse_context(args.context, network.n_farms)
        omega = generate_test_set(f, network.capacities, args.test_size,
                                  seed=args.seed + 777)
        save_test_set(omega, [w.id for w in network.wind_farms], args.test_out)
        print(f"wrote {args.test_size} test scenarios to {args.test_out}")
    return 0


def _cmd_solve(args) -> int:
    network = load_grid(args.grid)
    samples = load_samples(args.samples)
    f = _parse_context(args.context, network.n_farms)
    context = Context.from_capacities(f, network.capacities)
    cfg = MethodConfig(method=args.method, eps=args.eps, rho_excess=args.rho_excess,
                       rho_mode=args.rho_mode, context_scale=args.context_scale,
                       alpha=args.alpha, k_n=args.k_n, radius=args.radius,
                       solver=SolverConfig(method=args.lp_method))
    sol = solve_method(network, samples, context, cfg)
    sol.save(args.out)
    print(f"{args.method}: objective {sol.objective:.2f}, "
          f"status {sol.status}, solve {sol.solve_time:.2f}s -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    network = load_grid(args.grid)
    sol = DispatchSolution.load(args.solution)
    f = _parse_context(args.context, network.n_farms)
    context = Context.from_capacities(f, network.capacities)
    if args.test_set:
        omega = load_test_set(args.test_set)
    else:
        omega = generate_test_set(f, network.capacities, args.test_size,
                                  seed=args.seed + 777)
    report = evaluate(network, sol, context, omega, shed_cost=args.shed_cost,
                      spill_cost=args.spill_cost)
    if args.out:
        report.save(args.out)
    print(f"{report.method}: expected cost {report.expected_cost:.2f} "
          f"(std {report.cost_std:.2f}), violation {report.violation_prob:.4f} "
          f"over {report.n_scenarios} scenarios")
    return 0


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.workers:
        cfg.workers = args.workers
    base_dir = Path(args.config).resolve().parent
    rows = run_experiment(cfg, args.out_dir, base_dir=base_dir)
    n_fail = sum(1 for r in rows if r["status"] != "ok")
    print(f"completed {len(rows)} cells ({n_fail} failed) -> {args.out_dir}")
    summary, picks = summarize(rows, eps=cfg.eps)
    write_summary(summary, picks, args.out_dir)
    print(format_summary(summary))
    return 1 if n_fail else 0


def _cmd_summarize(args) -> int:
    rows = load_results(args.results)
    summary, picks = summarize(rows, eps=args.eps)
    out_dir = args.out_dir or Path(args.results).parent
    write_summary(summary, picks, out_dir)
    print(format_summary(summary))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dro-opf",
        description="Contextual distributionally robust chance-constrained "
                    "DC-OPF benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="draw joint context/error samples")
    p.add_argument("--grid", required=True)
    p.add_argument("--pool", default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--run", type=int, default=0)
    p.add_argument("--forecast-corr", type=float, default=FORECAST_CORR,
                   help="latent rank correlation of forecasts across farms")
    p.add_argument("--out", required=True)
    p.add_argument("--context", default=None, help="MW forecast, for --test-out")
    p.add_argument("--test-out", default=None)
    p.add_argument("--test-size", type=int, default=1000)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("solve", help="solve one dispatch problem")
    p.add_argument("--grid", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--context", required=True,
                   help="comma-separated MW forecast (single value broadcasts)")
    p.add_argument("--method", default="drotrimm",
                   choices=["drotrimm", "drow", "scena"])
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--rho-excess", type=float, default=0.0)
    p.add_argument("--rho-mode", default="shared_excess",
                   choices=["shared_excess", "shared_absolute"])
    p.add_argument("--context-scale", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--k-n", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--lp-method", default="highs-ipm",
                   choices=["highs", "highs-ds", "highs-ipm"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("evaluate", help="out-of-sample evaluation of a dispatch")
    p.add_argument("--grid", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--context", required=True)
    p.add_argument("--test-set", default=None)
    p.add_argument("--test-size", type=int, default=1000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--shed-cost", type=float, default=DEFAULT_SHED_COST)
    p.add_argument("--spill-cost", type=float, default=DEFAULT_SPILL_COST)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("run", help="run a benchmark sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("summarize", help="aggregate a results.csv")
    p.add_argument("--results", required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=_cmd_summarize)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
