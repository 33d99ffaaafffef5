"""Out-of-sample evaluation by corrective re-dispatch.

Each test scenario fixes the realized wind error; a small LP re-dispatches
generation within the procured reserve bands and may shed load (expensive)
or spill wind (free) as a last resort.  A scenario counts as a violation
when any shedding or spilling is needed.  The reported scenario cost is the
re-dispatched generation cost plus penalties plus the (constant) reserve
procurement cost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lp
from .lp import Aff, EQ, GE, LE, LpModel, SolverConfig
from .grid import NetworkModel, cost_epigraph_rows
from .methods import DispatchSolution
from .uncertainty import Context
from .cvar_block import evaluate_chance_rows, extract_chance_rows
from .grid import deterministic_rows

DEFAULT_SHED_COST = 500.0
DEFAULT_SPILL_COST = 0.0
VIOLATION_TOL_MW = 1e-4


@dataclass
class RedispatchOutcome:
    status: str
    cost: float  # generation + penalties (no reserve cost)
    r: np.ndarray
    shed: np.ndarray
    spill: np.ndarray
    violated: bool
    max_shed: float
    max_spill: float


class _RedispatchTemplate:
    """Re-dispatch LP with scenario-independent structure built once; per
    scenario only the spill bounds, the balance target, and the line-flow
    offsets change."""

    def __init__(self, network: NetworkModel, sol: DispatchSolution, f: np.ndarray,
                 shed_cost: float, spill_cost: float):
        self.network = network
        self.f = np.asarray(f, dtype=np.float64)
        ng, nb, nw, nl = (network.n_gens, network.n_buses, network.n_farms,
                          network.n_lines)
        m = LpModel("redispatch")
        self.r = np.array([m.add_var(f"r_{j}", lb=-float(sol.r_dn[j]),
                                     ub=float(sol.r_up[j])) for j in range(ng)],
                          dtype=np.int64)
        loads = network.loads
        self.shed = np.array([m.add_var(f"shed_{b}", lb=0.0, ub=float(loads[b]),
                                        obj=shed_cost) for b in range(nb)],
                             dtype=np.int64)
        self.spill = np.array([m.add_var(f"spill_{mm}", lb=0.0, ub=0.0,
                                         obj=spill_cost) for mm in range(nw)],
                              dtype=np.int64)
        for j, gen in enumerate(network.generators):
            t = m.add_var(f"t_{j}", lb=-np.inf, ub=np.inf, obj=1.0)
            arg = Aff([int(self.r[j])], [1.0], float(sol.g[j]))
            cost_epigraph_rows(m, gen.cost_pieces, arg, t, f"cost_{gen.id}")
        # energy balance: sum r + sum shed - sum spill = L - g - f - omega
        cols = list(self.r) + list(self.shed) + list(self.spill)
        vals = [1.0] * ng + [1.0] * nb + [-1.0] * nw
        self.balance_row = m.add_row(cols, vals, EQ, 0.0, "balance")
        self.balance_base = float(loads.sum() - sol.g.sum() - self.f.sum())
        # line flows: base + MG r - MW spill + MB shed within +-cap
        self.flow_base = (network.ptdf_g @ sol.g + network.ptdf_w @ self.f
                          - network.ptdf_b @ loads)
        caps = network.line_caps
        self.hi_rows = np.empty(nl, dtype=np.int64)
        self.lo_rows = np.empty(nl, dtype=np.int64)
        for ell in range(nl):
            cols = list(self.r) + list(self.spill) + list(self.shed)
            vals = (list(network.ptdf_g[ell]) + list(-network.ptdf_w[ell])
                    + list(network.ptdf_b[ell]))
            self.hi_rows[ell] = m.add_row(cols, vals, LE, float(caps[ell]),
                                          f"flow_hi_{ell}")
            self.lo_rows[ell] = m.add_row(cols, vals, GE, -float(caps[ell]),
                                          f"flow_lo_{ell}")
        self.model = m
        self.caps = caps

    def solve(self, omega: np.ndarray, solver: SolverConfig) -> RedispatchOutcome:
        omega = np.asarray(omega, dtype=np.float64)
        m = self.model
        avail = self.f + omega
        for mm, idx in enumerate(self.spill):
            m.set_bounds(int(idx), 0.0, max(float(avail[mm]), 0.0))
        m.set_rhs(self.balance_row, self.balance_base - float(omega.sum()))
        shift = self.network.ptdf_w @ omega
        for ell in range(self.network.n_lines):
            m.set_rhs(int(self.hi_rows[ell]), float(self.caps[ell] - self.flow_base[ell]
                                                    - shift[ell]))
            m.set_rhs(int(self.lo_rows[ell]), float(-self.caps[ell] - self.flow_base[ell]
                                                    - shift[ell]))
        res = lp.solve(m, solver)
        if res.status != lp.OPTIMAL:
            return RedispatchOutcome(status=res.status, cost=float("nan"),
                                     r=np.full(self.network.n_gens, np.nan),
                                     shed=np.full(self.network.n_buses, np.nan),
                                     spill=np.full(self.network.n_farms, np.nan),
                                     violated=True, max_shed=float("nan"),
                                     max_spill=float("nan"))
        x = res.x
        shed = x[self.shed]
        spill = x[self.spill]
        max_shed = float(shed.max(initial=0.0))
        max_spill = float(spill.max(initial=0.0))
        violated = max_shed > VIOLATION_TOL_MW or max_spill > VIOLATION_TOL_MW
        return RedispatchOutcome(status=res.status, cost=float(res.objective),
                                 r=x[self.r], shed=shed, spill=spill,
                                 violated=violated, max_shed=max_shed,
                                 max_spill=max_spill)


def redispatch(network: NetworkModel, sol: DispatchSolution, context: Context,
               omega: np.ndarray, shed_cost: float = DEFAULT_SHED_COST,
               spill_cost: float = DEFAULT_SPILL_COST,
               solver: SolverConfig | None = None) -> RedispatchOutcome:
    """Re-dispatch a single scenario; see module docstring for the model."""
    tpl = _RedispatchTemplate(network, sol, context.f, shed_cost, spill_cost)
    return tpl.solve(omega, solver or SolverConfig(method="highs"))


@dataclass
class EvaluationReport:
    method: str
    n_scenarios: int
    expected_cost: float
    cost_std: float
    violation_prob: float
    reserve_cost: float
    n_failed: int
    chance_violation_prob: float  # direct check of the affine chance rows
    costs: np.ndarray = field(repr=False)
    violated: np.ndarray = field(repr=False)
    max_shed: np.ndarray = field(repr=False)
    max_spill: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n_scenarios": self.n_scenarios,
            "expected_cost": self.expected_cost,
            "cost_std": self.cost_std,
            "violation_prob": self.violation_prob,
            "reserve_cost": self.reserve_cost,
            "n_failed": self.n_failed,
            "chance_violation_prob": self.chance_violation_prob,
            "costs": list(map(float, self.costs)),
            "violated": list(map(bool, self.violated)),
            "max_shed": list(map(float, self.max_shed)),
            "max_spill": list(map(float, self.max_spill)),
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def evaluate(network: NetworkModel, sol: DispatchSolution, context: Context,
             test_omega: np.ndarray, shed_cost: float = DEFAULT_SHED_COST,
             spill_cost: float = DEFAULT_SPILL_COST,
             solver: SolverConfig | None = None) -> EvaluationReport:
    """Evaluate a dispatch on a test set of error scenarios (one per row)."""
    test_omega = np.atleast_2d(np.asarray(test_omega, dtype=np.float64))
    if test_omega.shape[1] != network.n_farms:
        raise ValueError("test set width does not match wind farm count")
    solver = solver or SolverConfig(method="highs")
    tpl = _RedispatchTemplate(network, sol, context.f, shed_cost, spill_cost)
    reserve_cost = float(sum(gen.c_dn * sol.r_dn[j] + gen.c_up * sol.r_up[j]
                             for j, gen in enumerate(network.generators)))
    m = test_omega.shape[0]
    costs = np.empty(m)
    violated = np.zeros(m, dtype=bool)
    max_shed = np.empty(m)
    max_spill = np.empty(m)
    n_failed = 0
    for s in range(m):
        out = tpl.solve(test_omega[s], solver)
        if out.status != lp.OPTIMAL:
            n_failed += 1
            costs[s] = np.nan
            violated[s] = True
            max_shed[s] = np.nan
            max_spill[s] = np.nan
            continue
        costs[s] = out.cost + reserve_cost
        violated[s] = out.violated
        max_shed[s] = out.max_shed
        max_spill[s] = out.max_spill
    # secondary diagnostic: how often the affine chance rows themselves fail
    probe = LpModel("probe")
    xv = deterministic_rows(probe, network, context.f)
    rows = extract_chance_rows(network, context.f, xv)
    x = np.zeros(probe.n_vars)
    x[xv.g] = sol.g
    x[xv.beta] = sol.beta
    x[xv.r_dn] = sol.r_dn
    x[xv.r_up] = sol.r_up
    vals = evaluate_chance_rows(rows, x, test_omega)
    chance_viol = float(np.mean(np.max(vals, axis=1) > 1e-6))
    ok = ~np.isnan(costs)
    return EvaluationReport(
        method=sol.method, n_scenarios=m,
        expected_cost=float(np.mean(costs[ok])) if ok.any() else float("nan"),
        cost_std=float(np.std(costs[ok], ddof=1)) if ok.sum() > 1 else 0.0,
        violation_prob=float(violated.mean()), reserve_cost=reserve_cost,
        n_failed=n_failed, chance_violation_prob=chance_viol,
        costs=costs, violated=violated, max_shed=max_shed, max_spill=max_spill)
