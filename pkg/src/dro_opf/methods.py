"""The three benchmark dispatch methods.

- drotrimm: contextual DRO, trimmed ambiguity sets for both the joint
  chance constraint and the worst-case expected cost.
- drow: global Wasserstein DRO, same machinery with alpha = 1 and context
  distances zeroed, so the ambiguity ball is centered on the full sample.
- scena: conditioned scenario approximation, hard chance rows at the K_N
  context-nearest error samples with a scenario-average cost objective.

Budget semantics: `rho_excess` is added on top of each block's own minimum
transportation budget (mode "shared_excess"); mode "shared_absolute" treats
it as the absolute radius for both blocks.  For drow a raw `radius` override
is also honored.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import lp
from .lp import Aff, LE, LpModel, SolverConfig
from .grid import (NetworkModel, XVars, cost_epigraph_rows, deterministic_rows,
                   reserve_cost_aff, x_residual)
from .uncertainty import (Context, JointSampleSet, alpha_schedule,
                          box_distances, budget_from_distances,
                          context_distances)
from .cvar_block import emit_cvar_block, extract_chance_rows
from .cost_block import OmegaContext, emit_worstcase_cost_block

METHODS = ("drotrimm", "drow", "scena")

RHO_MODES = ("shared_excess", "shared_absolute")


class MethodError(ValueError):
    """Bad method configuration or an unusable solve outcome."""


@dataclass
class MethodConfig:
    method: str = "drotrimm"
    eps: float = 0.1
    rho_excess: float = 0.0
    rho_mode: str = "shared_excess"
    alpha: float | None = None  # default: alpha_schedule(N)
    k_n: int | None = None  # scena neighbor count, default schedule
    context_scale: float = 1.0
    radius: float | None = None  # drow: absolute ball radius override
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise MethodError(f"unknown method {self.method!r}")
        if not (0.0 < self.eps < 1.0):
            raise MethodError("eps must lie in (0, 1)")
        if self.rho_excess < 0:
            raise MethodError("rho_excess must be nonnegative")
        if self.rho_mode not in RHO_MODES:
            raise MethodError(f"unknown rho_mode {self.rho_mode!r}")
        if self.alpha is not None and not (0.0 < self.alpha <= 1.0):
            raise MethodError("alpha must lie in (0, 1]")
        if self.k_n is not None and self.k_n < 1:
            raise MethodError("k_n must be positive")
        if self.context_scale < 0:
            raise MethodError("context_scale must be nonnegative")
        if self.radius is not None and self.radius < 0:
            raise MethodError("radius must be nonnegative")


@dataclass
class DispatchSolution:
    method: str
    status: str
    g: np.ndarray
    beta: np.ndarray
    r_dn: np.ndarray
    r_up: np.ndarray
    objective: float
    build_time: float
    solve_time: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("g", "beta", "r_dn", "r_up"):
            d[k] = list(map(float, d[k]))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DispatchSolution":
        d = dict(d)
        for k in ("g", "beta", "r_dn", "r_up"):
            d[k] = np.asarray(d[k], dtype=np.float64)
        return cls(**d)

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "DispatchSolution":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _finish(model: LpModel, network: NetworkModel, context: Context, xv: XVars,
            cfg: MethodConfig, build_time: float, meta: dict) -> DispatchSolution:
    sol = lp.solve(model, cfg.solver)
    if sol.status != lp.OPTIMAL:
        raise MethodError(f"{cfg.method}: LP terminated with status {sol.status} "
                          f"({sol.message.strip()})")
    x = sol.x
    g = x[xv.g]
    beta = x[xv.beta]
    # interior-point solutions can sit a hair below zero; reserves are
    # nonnegative by construction and downstream LPs need lb <= ub
    r_dn = np.maximum(x[xv.r_dn], 0.0)
    r_up = np.maximum(x[xv.r_up], 0.0)
    resid = x_residual(network, context.f, g, beta, r_dn, r_up)
    if resid > 1e-6:
        raise MethodError(f"{cfg.method}: dispatch violates the deterministic "
                          f"set by {resid:.3e}")
    meta = dict(meta)
    meta.update(n_vars=model.n_vars, n_rows=model.n_rows,
                iterations=sol.iterations, max_violation=sol.max_violation)
    return DispatchSolution(method=cfg.method, status=sol.status, g=g, beta=beta,
                            r_dn=r_dn, r_up=r_up, objective=float(sol.objective),
                            build_time=build_time, solve_time=sol.wall_time,
                            meta=meta)


def _resolve_alpha(cfg: MethodConfig, n: int) -> float:
    if cfg.alpha is not None:
        return cfg.alpha
    return alpha_schedule(n)[1]


def _budgets(cfg: MethodConfig, rho_min_cc: float, rho_min_cost: float,
             radius: float | None) -> tuple[float, float]:
    if radius is not None:
        return radius, radius
    if cfg.rho_mode == "shared_absolute":
        return cfg.rho_excess, cfg.rho_excess
    return rho_min_cc + cfg.rho_excess, rho_min_cost + cfg.rho_excess


def _solve_dro(network: NetworkModel, samples: JointSampleSet, context: Context,
               cfg: MethodConfig, alpha: float, z_dist: np.ndarray,
               radius: float | None) -> DispatchSolution:
    t0 = time.perf_counter()
    model = LpModel(f"{cfg.method}")
    xv = deterministic_rows(model, network, context.f)
    rows = extract_chance_rows(network, context.f, xv)
    rho_min_cc = budget_from_distances(
        z_dist + box_distances(samples.w_hat, context.box_lo, context.box_hi), alpha)
    octx = OmegaContext.from_samples(samples, context, z_dist)
    rho_min_cost = octx.rho_min(alpha)
    rho_cc, rho_cost = _budgets(cfg, rho_min_cc, rho_min_cost, radius)
    objective, cost_info = emit_worstcase_cost_block(model, network, xv, octx,
                                                     alpha, rho_cost)
    model.add_obj_aff(objective)
    master, cc_info = emit_cvar_block(model, rows, samples, context, alpha,
                                      cfg.eps, rho_cc, z_dist)
    model.add_row_aff(master, LE, 0.0, "cvar_master")
    build_time = time.perf_counter() - t0
    meta = {"alpha": alpha, "rho_cc": rho_cc, "rho_cost": rho_cost,
            "rho_min_cc": rho_min_cc, "rho_min_cost": rho_min_cost,
            "n_samples": samples.n, "eps": cfg.eps,
            "cvar_pairs": cc_info["pairs"]}
    return _finish(model, network, context, xv, cfg, build_time, meta)


def solve_drotrimm(network: NetworkModel, samples: JointSampleSet,
                   context: Context, cfg: MethodConfig) -> DispatchSolution:
    if cfg.method != "drotrimm":
        raise MethodError("config method mismatch")
    alpha = _resolve_alpha(cfg, samples.n)
    z_dist = context_distances(samples, context.f, cfg.context_scale)
    return _solve_dro(network, samples, context, cfg, alpha, z_dist, None)


def solve_drow(network: NetworkModel, samples: JointSampleSet,
               context: Context, cfg: MethodConfig) -> DispatchSolution:
    """Global Wasserstein DRO: no trimming (alpha = 1), no context metric."""
    if cfg.method != "drow":
        raise MethodError("config method mismatch")
    return _solve_dro(network, samples, context, cfg, 1.0,
                      np.zeros(samples.n), cfg.radius)


def solve_scena(network: NetworkModel, samples: JointSampleSet,
                context: Context, cfg: MethodConfig) -> DispatchSolution:
    if cfg.method != "scena":
        raise MethodError("config method mismatch")
    n = samples.n
    k_n = cfg.k_n if cfg.k_n is not None else alpha_schedule(n)[0]
    if k_n > n:
        raise MethodError(f"k_n = {k_n} exceeds sample count {n}")
    t0 = time.perf_counter()
    d = context_distances(samples, context.f, 1.0)
    neighbors = np.argsort(d, kind="stable")[:k_n]  # ties broken by sample index
    model = LpModel("scena")
    xv = deterministic_rows(model, network, context.f)
    rows = extract_chance_rows(network, context.f, xv)
    for i in neighbors:
        wi = samples.w_hat[int(i)]
        om_i = float(wi.sum())
        for row in rows:
            # a1(x) . w_hat_i + a2(x) <= 0 enforced at the scenario
            expr = row.a2
            for m, a in enumerate(row.a1):
                expr = expr.plus(a.scaled(float(wi[m])))
            model.add_row_aff(expr, LE, 0.0, f"sc_{int(i)}_{row.tag}")
        # scenario-average recourse cost epigraphs
        tc = [model.add_var(f"tc_{int(i)}_{j}", lb=-np.inf, ub=np.inf,
                            obj=1.0 / k_n) for j in range(network.n_gens)]
        for j, gen in enumerate(network.generators):
            arg = Aff([int(xv.g[j]), int(xv.beta[j])], [1.0, -om_i])
            cost_epigraph_rows(model, gen.cost_pieces, arg, tc[j],
                               f"sc_cost_{int(i)}_{j}")
    model.add_obj_aff(reserve_cost_aff(network, xv))
    build_time = time.perf_counter() - t0
    meta = {"k_n": int(k_n), "n_samples": n, "neighbors": [int(i) for i in neighbors]}
    return _finish(model, network, context, xv, cfg, build_time, meta)


def solve_method(network: NetworkModel, samples: JointSampleSet, context: Context,
                 cfg: MethodConfig) -> DispatchSolution:
    fn = {"drotrimm": solve_drotrimm, "drow": solve_drow, "scena": solve_scena}
    return fn[cfg.method](network, samples, context, cfg)
