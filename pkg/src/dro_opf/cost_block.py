"""Worst-case expected generation cost over the trimmed ambiguity set.

The recourse cost sum_j C_j(g_j - beta_j * Omega) is convex piecewise linear
in the aggregate error Omega, so its worst-case expectation over the
ambiguity set admits an exact dual with one epigraph family per sample.
Samples are split by position of their aggregate error relative to the
conditional interval [omega_lo, omega_hi]: inside samples can stay put or
move to either edge, outside samples must pay transport to re-enter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp import Aff, GE, LpModel
from .grid import NetworkModel, XVars, cost_epigraph_rows, reserve_cost_aff
from .uncertainty import (BudgetBelowMinimum, Context, JointSampleSet,
                          UncertaintyError, budget_from_distances,
                          interval_distances)


@dataclass
class OmegaContext:
    """Aggregate-error view of a sample set at a query context."""

    omega_hat: np.ndarray  # (N,) aggregate error per sample
    z_dist: np.ndarray  # (N,) scaled context distances
    lo: float
    hi: float
    under: np.ndarray = field(init=False)  # omega_hat < lo
    over: np.ndarray = field(init=False)  # omega_hat > hi
    inside: np.ndarray = field(init=False)

    def __post_init__(self):
        self.omega_hat = np.asarray(self.omega_hat, dtype=np.float64)
        self.z_dist = np.asarray(self.z_dist, dtype=np.float64)
        if self.omega_hat.shape != self.z_dist.shape or self.omega_hat.ndim != 1:
            raise UncertaintyError("omega_hat and z_dist must be equal-length vectors")
        if not (self.lo <= self.hi):
            raise UncertaintyError("empty aggregate interval")
        self.under = self.omega_hat < self.lo
        self.over = self.omega_hat > self.hi
        self.inside = ~(self.under | self.over)

    @classmethod
    def from_samples(cls, samples: JointSampleSet, context: Context,
                     z_dist: np.ndarray) -> "OmegaContext":
        return cls(omega_hat=samples.omega_hat, z_dist=np.asarray(z_dist),
                   lo=context.omega_lo, hi=context.omega_hi)

    @property
    def n(self) -> int:
        return self.omega_hat.size

    def rho_min(self, alpha: float) -> float:
        d = self.z_dist + interval_distances(self.omega_hat, self.lo, self.hi)
        return budget_from_distances(d, alpha)


def emit_worstcase_cost_block(model: LpModel, network: NetworkModel, xv: XVars,
                              data: OmegaContext, alpha: float,
                              rho: float) -> tuple[Aff, dict]:
    """Emit the dual block and return (objective expression, info).

    The expression equals lam * rho + theta + (1/(N alpha)) sum_i mu_i plus
    the reserve procurement cost; minimizing it yields the worst-case
    expected dispatch cost.
    """
    if not (0.0 < alpha <= 1.0):
        raise UncertaintyError("alpha must lie in (0, 1]")
    rho_min = data.rho_min(alpha)
    if rho < rho_min - 1e-9:
        raise BudgetBelowMinimum(rho, rho_min, "worst-case cost block")
    n = data.n
    ng = network.n_gens
    block_start = model.n_vars
    rows_before = model.n_rows
    inf = np.inf

    lam = model.add_var("lam", lb=0.0, ub=inf)
    th = model.add_var("th", lb=-inf, ub=inf)
    mub = [model.add_var(f"mub_{i}", lb=0.0, ub=inf) for i in range(n)]
    t_i = [model.add_var(f"t_{i}", lb=-inf, ub=inf) for i in range(n)]

    for i in range(n):
        # mu_i + theta + lam d_i >= t_i
        model.add_row([mub[i], th, lam, t_i[i]], [1.0, 1.0, float(data.z_dist[i]), -1.0],
                      GE, 0.0, f"wc_lb_{i}")
        om_i = float(data.omega_hat[i])
        tlo = [model.add_var(f"tlo_{i}_{j}", lb=-inf, ub=inf) for j in range(ng)]
        thi = [model.add_var(f"thi_{i}_{j}", lb=-inf, ub=inf) for j in range(ng)]
        # t_i >= sum_j cost_at(edge) - lam * |edge - omega_i| for both edges;
        # inside samples additionally may stay put at no transport cost
        model.add_row([t_i[i], lam] + tlo,
                      [1.0, abs(data.lo - om_i)] + [-1.0] * ng,
                      GE, 0.0, f"wc_lo_{i}")
        model.add_row([t_i[i], lam] + thi,
                      [1.0, abs(data.hi - om_i)] + [-1.0] * ng,
                      GE, 0.0, f"wc_hi_{i}")
        if data.inside[i]:
            that = [model.add_var(f"that_{i}_{j}", lb=-inf, ub=inf) for j in range(ng)]
            model.add_row([t_i[i]] + that, [1.0] + [-1.0] * ng, GE, 0.0, f"wc_hat_{i}")
            for j, gen in enumerate(network.generators):
                arg = Aff([int(xv.g[j]), int(xv.beta[j])], [1.0, -om_i])
                cost_epigraph_rows(model, gen.cost_pieces, arg, that[j],
                                   f"wc_phat_{i}_{j}")
        for j, gen in enumerate(network.generators):
            arg_lo = Aff([int(xv.g[j]), int(xv.beta[j])], [1.0, -data.lo])
            cost_epigraph_rows(model, gen.cost_pieces, arg_lo, tlo[j],
                               f"wc_plo_{i}_{j}")
            arg_hi = Aff([int(xv.g[j]), int(xv.beta[j])], [1.0, -data.hi])
            cost_epigraph_rows(model, gen.cost_pieces, arg_hi, thi[j],
                               f"wc_phi_{i}_{j}")

    objective = Aff([lam, th] + mub,
                    [rho, 1.0] + [1.0 / (n * alpha)] * n).plus(
        reserve_cost_aff(network, xv))
    n_pieces = sum(len(g.cost_pieces) for g in network.generators)
    info = {
        "rho_min": rho_min,
        "vars": model.n_vars - block_start,
        "rows": model.n_rows - rows_before,
        "n_inside": int(data.inside.sum()),
        "n_under": int(data.under.sum()),
        "n_over": int(data.over.sum()),
        "piece_rows": n_pieces * (2 * n + int(data.inside.sum())),
    }
    return objective, info


def dispatch_cost(network: NetworkModel, g: np.ndarray, beta: np.ndarray,
                  omega: float) -> float:
    """Nominal piecewise cost sum_j C_j(g_j - beta_j * omega)."""
    return float(sum(gen.cost_at(float(g[j] - beta[j] * omega))
                     for j, gen in enumerate(network.generators)))
