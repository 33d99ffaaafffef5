"""Out-of-sample re-dispatch evaluation."""

import json

import numpy as np
import pytest

from dro_opf.methods import DispatchSolution, MethodConfig, solve_drotrimm
from dro_opf.evaluate import (VIOLATION_TOL_MW, EvaluationReport, evaluate,
                              redispatch)

from conftest import mid_context, random_samples, three_bus
from oracles import redispatch_lp


def _manual_solution(g, beta, r_dn, r_up):
    return DispatchSolution(method="manual", status="optimal",
                            g=np.asarray(g, dtype=float),
                            beta=np.asarray(beta, dtype=float),
                            r_dn=np.asarray(r_dn, dtype=float),
                            r_up=np.asarray(r_up, dtype=float),
                            objective=0.0, build_time=0.0, solve_time=0.0)


def test_nominal_scenario_needs_no_action():
    net = three_bus()
    ctx = mid_context(net)  # f = 24, so scheduled generation totals 76
    sol = _manual_solution([50.0, 26.0], [0.5, 0.5], [5.0, 5.0], [5.0, 5.0])
    out = redispatch(net, sol, ctx, np.zeros(1))
    assert out.status == "optimal"
    assert not out.violated
    assert out.max_shed == 0.0 and out.max_spill == 0.0
    stay_put = sum(gen.cost_at(sol.g[j]) for j, gen in enumerate(net.generators))
    assert out.cost <= stay_put + 1e-6


def test_surplus_without_down_reserve_is_spilled():
    net = three_bus()
    ctx = mid_context(net)
    sol = _manual_solution([50.0, 26.0], [0.5, 0.5], [0.0, 0.0], [10.0, 10.0])
    out = redispatch(net, sol, ctx, np.array([10.0]))
    assert out.violated
    assert out.max_spill == pytest.approx(10.0, abs=1e-6)
    assert out.max_shed == pytest.approx(0.0, abs=1e-6)
    stay_put = sum(gen.cost_at(sol.g[j]) for j, gen in enumerate(net.generators))
    assert out.cost == pytest.approx(stay_put, rel=1e-9)  # spilling is free


def test_deficit_without_up_reserve_is_shed():
    net = three_bus()
    ctx = mid_context(net)
    sol = _manual_solution([50.0, 26.0], [0.5, 0.5], [10.0, 10.0], [0.0, 0.0])
    out = redispatch(net, sol, ctx, np.array([-10.0]))
    assert out.violated
    assert out.max_shed == pytest.approx(10.0, abs=1e-6)
    stay_put = sum(gen.cost_at(sol.g[j]) for j, gen in enumerate(net.generators))
    assert out.cost == pytest.approx(stay_put + 500.0 * 10.0, rel=1e-9)


def test_deficit_within_reserve_band_is_covered():
    net = three_bus()
    ctx = mid_context(net)
    sol = _manual_solution([50.0, 26.0], [0.5, 0.5], [10.0, 10.0], [10.0, 10.0])
    out = redispatch(net, sol, ctx, np.array([-8.0]))
    assert not out.violated
    assert out.r.sum() == pytest.approx(8.0, abs=1e-6)


def test_redispatch_matches_reference_lp():
    """Criterion-7 style sweep against an independently assembled LP."""
    net = three_bus()
    ctx = mid_context(net)
    samples = random_samples(np.random.default_rng(29), net, 10)
    sol = solve_drotrimm(net, samples, ctx, MethodConfig(rho_excess=1.0))
    rng = np.random.default_rng(31)
    for _ in range(20):
        omega = rng.uniform(-24.0, 16.0, size=1)
        out = redispatch(net, sol, ctx, omega)
        cost, max_shed, max_spill = redispatch_lp(net, sol.g, sol.r_dn,
                                                  sol.r_up, ctx.f, omega)
        assert out.cost == pytest.approx(cost, rel=1e-6, abs=1e-6), omega
        mine = out.max_shed > VIOLATION_TOL_MW or out.max_spill > VIOLATION_TOL_MW
        ref = max_shed > VIOLATION_TOL_MW or max_spill > VIOLATION_TOL_MW
        assert mine == ref, omega


def test_evaluate_aggregates_per_scenario_outcomes():
    net = three_bus()
    ctx = mid_context(net)
    samples = random_samples(np.random.default_rng(37), net, 10)
    sol = solve_drotrimm(net, samples, ctx, MethodConfig(rho_excess=1.0))
    rng = np.random.default_rng(41)
    scenarios = rng.uniform(-24.0, 16.0, size=(15, 1))
    report = evaluate(net, sol, ctx, scenarios)
    assert report.n_scenarios == 15 and report.n_failed == 0
    singles = [redispatch(net, sol, ctx, om) for om in scenarios]
    reserve = report.reserve_cost
    assert reserve == pytest.approx(
        sum(g.c_dn * sol.r_dn[j] + g.c_up * sol.r_up[j]
            for j, g in enumerate(net.generators)))
    np.testing.assert_allclose(report.costs,
                               [s.cost + reserve for s in singles], rtol=1e-9)
    assert report.violation_prob == pytest.approx(
        np.mean([s.violated for s in singles]))
    assert report.expected_cost == pytest.approx(np.mean(report.costs))
    assert report.cost_std == pytest.approx(np.std(report.costs, ddof=1))


def test_chance_violation_diagnostic():
    net = three_bus()
    ctx = mid_context(net)
    # no reserves at all: any nonzero error violates a reserve-coverage row
    sol = _manual_solution([50.0, 26.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    report = evaluate(net, sol, ctx, np.array([[0.0], [-5.0], [4.0]]))
    assert report.chance_violation_prob == pytest.approx(2.0 / 3.0)


def test_report_save(tmp_path):
    net = three_bus()
    ctx = mid_context(net)
    sol = _manual_solution([50.0, 26.0], [0.5, 0.5], [5.0, 5.0], [5.0, 5.0])
    report = evaluate(net, sol, ctx, np.array([[0.0], [2.0]]))
    path = tmp_path / "report.json"
    report.save(path)
    back = json.loads(path.read_text())
    assert back["method"] == "manual"
    assert back["n_scenarios"] == 2
    assert back["costs"] == pytest.approx(list(report.costs))
    assert set(back) == set(EvaluationReport.__dataclass_fields__)


def test_evaluate_rejects_width_mismatch():
    net = three_bus()
    sol = _manual_solution([50.0, 26.0], [0.5, 0.5], [5.0, 5.0], [5.0, 5.0])
    with pytest.raises(ValueError, match="width"):
        evaluate(net, sol, mid_context(net), np.zeros((3, 2)))
