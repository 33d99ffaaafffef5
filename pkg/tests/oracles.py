"""Independent reference implementations used only by the tests.

Everything here is deliberately built along a different route than the
package: flows come from solving the angle system, budgets from an explicit
LP over the trimming polytope, and the worst-case quantities from brute
force partial-transport LPs over exact candidate destinations plus a
one-dimensional scan for the CVaR threshold.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog, minimize_scalar


def dc_flow(buses, lines, injections, slack_bus):
    """Line flows for given bus injections via the angle formulation."""
    pos = {b.id: i for i, b in enumerate(buses)}
    nb, nl = len(buses), len(lines)
    b_bus = np.zeros((nb, nb))
    for ln in lines:
        i, j = pos[ln.from_bus], pos[ln.to_bus]
        y = 1.0 / ln.reactance
        b_bus[i, i] += y
        b_bus[j, j] += y
        b_bus[i, j] -= y
        b_bus[j, i] -= y
    keep = [i for i in range(nb) if i != pos[slack_bus]]
    theta = np.zeros(nb)
    theta[keep] = np.linalg.solve(b_bus[np.ix_(keep, keep)],
                                  np.asarray(injections)[keep])
    return np.array([(theta[pos[ln.from_bus]] - theta[pos[ln.to_bus]]) / ln.reactance
                     for ln in lines])


def trimming_min_cost_lp(d: np.ndarray, alpha: float) -> float:
    """min sum b_i d_i over the trimming polytope, solved as an explicit LP."""
    d = np.asarray(d, dtype=np.float64)
    n = d.size
    cap = 1.0 / (n * alpha)
    res = linprog(d, A_eq=np.ones((1, n)), b_eq=[1.0],
                  bounds=[(0.0, cap)] * n, method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def _candidates(y: float, lo: float, hi: float) -> list[float]:
    return sorted({lo, hi, float(np.clip(y, lo, hi))})


def partial_transport_sup(phi, y_hat, z_dist, lo, hi, alpha, rho,
                          extra_candidates=()) -> float:
    """sup E_Q[phi] over distributions within transport budget rho of some
    trimming of the atoms, supported on [lo, hi].

    phi must be convex on [lo, hi]; then destinations beyond each atom's
    clipped position and the interval ends never help, so the LP over those
    candidates is exact.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    z_dist = np.asarray(z_dist, dtype=np.float64)
    n = y_hat.size
    cols = []  # (atom, destination)
    for i in range(n):
        for c in _candidates(y_hat[i], lo, hi):
            cols.append((i, c))
        for c in extra_candidates:
            if lo <= c <= hi:
                cols.append((i, float(c)))
    values = np.array([phi(c) for _, c in cols])
    cost = np.array([z_dist[i] + abs(c - y_hat[i]) for i, c in cols])
    n_cols = len(cols)
    # rows: per-atom mass cap, total mass = 1, budget
    a_ub = np.zeros((n + 1, n_cols))
    for idx, (i, _) in enumerate(cols):
        a_ub[i, idx] = 1.0
    a_ub[n] = cost
    b_ub = np.concatenate([np.full(n, 1.0 / (n * alpha)), [rho]])
    a_eq = np.ones((1, n_cols))
    res = linprog(-values, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0.0, None)] * n_cols, method="highs")
    assert res.status == 0, res.message
    return float(-res.fun)


def worstcase_cvar(g_rows, y_hat, z_dist, lo, hi, alpha, rho, eps) -> float:
    """min_tau tau + (1/eps) sup E[(max_k g_k - tau)+]; g_rows are (a1, a2)
    pairs of one-dimensional affine rows."""
    a1 = np.array([r[0] for r in g_rows])
    a2 = np.array([r[1] for r in g_rows])

    def g_of(c: float) -> float:
        return float(np.max(a1 * c + a2))

    # range of g over the box: corners plus interior piece intersections
    cands = [lo, hi]
    for p in range(len(a1)):
        for q in range(p + 1, len(a1)):
            if abs(a1[p] - a1[q]) > 1e-14:
                c = (a2[q] - a2[p]) / (a1[p] - a1[q])
                if lo < c < hi:
                    cands.append(float(c))
    g_vals = [g_of(c) for c in cands]
    t_lo = min(g_vals) - 1.0
    t_hi = max(g_vals) + 1.0

    def f_of(tau: float) -> float:
        phi = lambda c: max(0.0, g_of(c) - tau)
        return tau + partial_transport_sup(phi, y_hat, z_dist, lo, hi,
                                           alpha, rho) / eps

    grid = np.linspace(t_lo, t_hi, 41)
    vals = [f_of(t) for t in grid]
    j = int(np.argmin(vals))
    b_lo = grid[max(0, j - 1)]
    b_hi = grid[min(len(grid) - 1, j + 1)]
    res = minimize_scalar(f_of, bounds=(b_lo, b_hi), method="bounded",
                          options={"xatol": 1e-10})
    return float(min(res.fun, min(vals)))


def worstcase_expected_cost(network, g, beta, omega_hat, z_dist, lo, hi,
                            alpha, rho) -> float:
    """sup E[sum_j C_j(g_j - beta_j Omega)] over the aggregate-error
    ambiguity set, by the exact-candidate transport LP."""

    def phi(c: float) -> float:
        return float(sum(gen.cost_at(float(g[j] - beta[j] * c))
                         for j, gen in enumerate(network.generators)))

    return partial_transport_sup(phi, omega_hat, z_dist, lo, hi, alpha, rho)


def redispatch_lp(network, g, r_dn, r_up, f, omega, shed_cost=500.0,
                  spill_cost=0.0):
    """Independent dense assembly of the corrective re-dispatch LP.
    Returns (cost, max_shed, max_spill)."""
    ng, nb, nw, nl = (network.n_gens, network.n_buses, network.n_farms,
                      network.n_lines)
    f = np.asarray(f, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    loads = network.loads
    n_pieces = [len(gen.cost_pieces) for gen in network.generators]
    # variables: r (ng), shed (nb), spill (nw), t (ng)
    nv = ng + nb + nw + ng
    c = np.concatenate([np.zeros(ng), np.full(nb, shed_cost),
                        np.full(nw, spill_cost), np.ones(ng)])
    bounds = ([(-float(r_dn[j]), float(r_up[j])) for j in range(ng)]
              + [(0.0, float(loads[b])) for b in range(nb)]
              + [(0.0, max(float(f[m] + omega[m]), 0.0)) for m in range(nw)]
              + [(None, None)] * ng)
    a_eq = np.zeros((1, nv))
    a_eq[0, :ng] = 1.0
    a_eq[0, ng:ng + nb] = 1.0
    a_eq[0, ng + nb:ng + nb + nw] = -1.0
    b_eq = [float(loads.sum() - np.sum(g) - f.sum() - omega.sum())]
    rows_ub, rhs_ub = [], []
    base = (network.ptdf_g @ np.asarray(g) + network.ptdf_w @ (f + omega)
            - network.ptdf_b @ loads)
    for ell in range(nl):
        row = np.zeros(nv)
        row[:ng] = network.ptdf_g[ell]
        row[ng:ng + nb] = network.ptdf_b[ell]
        row[ng + nb:ng + nb + nw] = -network.ptdf_w[ell]
        cap = network.lines[ell].cap
        rows_ub.append(row.copy())
        rhs_ub.append(cap - base[ell])
        rows_ub.append(-row)
        rhs_ub.append(cap + base[ell])
    for j, gen in enumerate(network.generators):
        for (m, n) in gen.cost_pieces:
            row = np.zeros(nv)
            row[j] = m
            row[ng + nb + nw + j] = -1.0
            rows_ub.append(row)
            rhs_ub.append(-n - m * float(g[j]))
    res = linprog(c, A_ub=np.array(rows_ub), b_ub=np.array(rhs_ub),
                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        return float("nan"), float("nan"), float("nan")
    x = res.x
    return (float(res.fun), float(x[ng:ng + nb].max(initial=0.0)),
            float(x[ng + nb:ng + nb + nw].max(initial=0.0)))
