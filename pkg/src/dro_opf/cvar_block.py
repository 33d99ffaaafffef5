"""Joint chance constraint: CVaR-over-trimmings dual block.

The joint constraint collects K = 2|G| + 2|L| affine-in-omega rows
a1_k(x) . omega + a2_k(x) <= 0 (reserve coverage up/down per generator,
line flow upper/lower per line).  Its distributionally robust CVaR
approximation dualizes into one linear block per (sample i, row k),
including a padding row k = K with a1 = 0 and shifted intercept 0.

Everything the block adds is linear; the dual multiplies data constants
(sample values, distances, box corners) with block-local variables only,
so a build-time audit rejects any accidental product of two decision
variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import Aff, EQ, GE, LE, LpError, LpModel
from .grid import NetworkModel, XVars
from .uncertainty import (BudgetBelowMinimum, Context, JointSampleSet,
                          UncertaintyError, budget_from_distances, box_distances)


@dataclass
class ChanceRow:
    """One affine row a1(x) . omega + a2(x) <= 0 of the joint constraint."""

    a1: list[Aff]  # per-farm coefficient of omega_m, affine in x
    a2: Aff  # intercept, affine in x
    tag: str


def extract_chance_rows(network: NetworkModel, f: np.ndarray,
                        xv: XVars) -> list[ChanceRow]:
    """Reserve-coverage rows for every generator, then flow rows for every
    line (upper before lower), in network order."""
    f = np.asarray(f, dtype=np.float64)
    w = network.n_farms
    rows: list[ChanceRow] = []
    for j, gen in enumerate(network.generators):
        up = Aff.single(int(xv.beta[j]), -1.0)
        rows.append(ChanceRow(a1=[up] * w,
                              a2=Aff.single(int(xv.r_up[j]), -1.0),
                              tag=f"ru_{gen.id}"))
        dn = Aff.single(int(xv.beta[j]), 1.0)
        rows.append(ChanceRow(a1=[dn] * w,
                              a2=Aff.single(int(xv.r_dn[j]), -1.0),
                              tag=f"rd_{gen.id}"))
    mw_f = network.ptdf_w @ f if w else np.zeros(network.n_lines)
    mb_l = network.ptdf_b @ network.loads
    for ell in range(network.n_lines):
        mg = network.ptdf_g[ell]
        base = float(mw_f[ell] - mb_l[ell])
        flow_free = Aff(xv.g, mg, base)  # flow at omega = 0
        cap = network.lines[ell].cap
        a1_hi = [Aff(xv.beta, -mg, float(network.ptdf_w[ell, m]))
                 for m in range(w)]
        rows.append(ChanceRow(a1=a1_hi, a2=flow_free.plus(Aff.constant(-cap)),
                              tag=f"line_hi_{ell}"))
        a1_lo = [Aff(xv.beta, mg, -float(network.ptdf_w[ell, m]))
                 for m in range(w)]
        rows.append(ChanceRow(a1=a1_lo, a2=flow_free.scaled(-1.0).plus(Aff.constant(-cap)),
                              tag=f"line_lo_{ell}"))
    return rows


def evaluate_chance_rows(rows: list[ChanceRow], x: np.ndarray,
                         omega: np.ndarray) -> np.ndarray:
    """Row values a1(x) . omega + a2(x); omega may be (W,) or (M, W).
    Returns (K,) or (M, K)."""
    omega = np.asarray(omega, dtype=np.float64)
    single = omega.ndim == 1
    om = np.atleast_2d(omega)
    out = np.empty((om.shape[0], len(rows)))
    for k, row in enumerate(rows):
        a1_val = np.array([a.value(x) for a in row.a1])
        out[:, k] = om @ a1_val + row.a2.value(x)
    return out[0] if single else out


def cvar_block_audit(n: int, k_rows: int, w: int) -> dict:
    """Predicted variable/row counts for the dual block (master row excluded)."""
    pairs = n * (k_rows + 1)
    return {
        "pairs": pairs,
        "vars": 3 + n + pairs * (3 * w + 1),
        "rows": pairs * (5 * w + 2),
        "rows_b": pairs,
        "rows_c": pairs * w,
        "rows_d": pairs * (2 * w + 1),
        "rows_e": pairs * 2 * w,
    }


def emit_cvar_block(model: LpModel, rows: list[ChanceRow], samples: JointSampleSet,
                    context: Context, alpha: float, eps: float, rho: float,
                    z_dist: np.ndarray) -> tuple[Aff, dict]:
    """Emit the dual block and return (master expression, audit info).

    The caller enforces the chance constraint by adding `master <= 0`;
    minimizing `master` instead recovers the worst-case CVaR value.
    """
    if not (0.0 < eps < 1.0):
        raise UncertaintyError("eps must lie in (0, 1)")
    if not (0.0 < alpha <= 1.0):
        raise UncertaintyError("alpha must lie in (0, 1]")
    n, w = samples.n, samples.n_farms
    if len(context.f) != w:
        raise UncertaintyError("context width does not match samples")
    z_dist = np.asarray(z_dist, dtype=np.float64)
    if z_dist.shape != (n,):
        raise UncertaintyError("z_dist must have one entry per sample")
    rho_min = budget_from_distances(
        z_dist + box_distances(samples.w_hat, context.box_lo, context.box_hi), alpha)
    if rho < rho_min - 1e-9:
        raise BudgetBelowMinimum(rho, rho_min, "chance-constraint block")

    k_rows = len(rows)
    block_start = model.n_vars
    rows_before = model.n_rows
    for row in rows:
        for a in list(row.a1) + [row.a2]:
            if len(a.idx) and int(a.idx.max()) >= block_start:
                raise LpError(
                    f"chance row {row.tag} references a block-internal variable; "
                    "the dual would be bilinear")

    lo, hi = context.box_lo, context.box_hi
    w_hat = samples.w_hat
    tau = model.add_var("tau", lb=-np.inf, ub=np.inf)
    lam2 = model.add_var("lam2", lb=0.0, ub=np.inf)
    th2 = model.add_var("th2", lb=-np.inf, ub=np.inf)
    mu = np.array([model.add_var(f"mu_{i}", lb=0.0, ub=np.inf) for i in range(n)],
                  dtype=np.int64)

    # pre-resolve row data; entry K is the padding row (a1 = 0, a'2 = 0, no tau)
    resolved = []
    for row in rows:
        a1m = [(a.idx, a.coef, float(a.const)) for a in row.a1]
        resolved.append((a1m, (row.a2.idx, row.a2.coef, float(row.a2.const)), True))
    zero = Aff.constant(0.0)
    resolved.append(([(zero.idx, zero.coef, 0.0)] * w,
                     (zero.idx, zero.coef, 0.0), False))

    add_var = model.add_var
    add_row = model.add_row
    inf = np.inf
    for i in range(n):
        di = float(z_dist[i])
        wi = w_hat[i]
        mu_i = int(mu[i])
        for k, (a1m, (a2_idx, a2_coef, a2_const), with_tau) in enumerate(resolved):
            ga = [add_var(f"ga_{i}_{k}_{m}", lb=-inf, ub=inf) for m in range(w)]
            vv = [add_var(f"vv_{i}_{k}_{m}", lb=-inf, ub=inf) for m in range(w)]
            tt = [add_var(f"tt_{i}_{k}_{m}", lb=-inf, ub=inf) for m in range(w)]
            ss = add_var(f"ss_{i}_{k}", lb=-inf, ub=inf)
            # (b) mu_i + th2 + lam2 d_i >= a2(x) - tau + s - <gamma, w_hat_i>
            cols = [mu_i, th2, lam2, ss] + ga
            vals = [1.0, 1.0, di, -1.0] + [float(v) for v in wi]
            if with_tau:
                cols.append(tau)
                vals.append(1.0)
            cols += [int(c) for c in a2_idx]
            vals += [-float(v) for v in a2_coef]
            add_row(cols, vals, GE, a2_const, f"cc_b_{i}_{k}")
            for m in range(w):
                a1_idx, a1_coef, a1_const = a1m[m]
                # (c) gamma - v = -a1(x)
                cols = [ga[m], vv[m]] + [int(c) for c in a1_idx]
                vals = [1.0, -1.0] + [float(v) for v in a1_coef]
                add_row(cols, vals, EQ, -a1_const, f"cc_c_{i}_{k}_{m}")
                # (d) t >= v * corner for both box corners
                add_row([tt[m], vv[m]], [1.0, -float(lo[m])], GE, 0.0,
                        f"cc_tl_{i}_{k}_{m}")
                add_row([tt[m], vv[m]], [1.0, -float(hi[m])], GE, 0.0,
                        f"cc_th_{i}_{k}_{m}")
                # (e) |gamma| <= lam2
                add_row([ga[m], lam2], [1.0, -1.0], LE, 0.0, f"cc_el_{i}_{k}_{m}")
                add_row([ga[m], lam2], [-1.0, -1.0], LE, 0.0, f"cc_eh_{i}_{k}_{m}")
            # (d) s = sum_m t
            add_row([ss] + tt, [1.0] + [-1.0] * w, EQ, 0.0, f"cc_sl_{i}_{k}")

    audit = cvar_block_audit(n, k_rows, w)
    added_vars = model.n_vars - block_start
    added_rows = model.n_rows - rows_before
    if added_vars != audit["vars"] or added_rows != audit["rows"]:
        raise LpError(f"block size mismatch: built ({added_vars}, {added_rows}), "
                      f"predicted ({audit['vars']}, {audit['rows']})")
    audit["rho_min"] = rho_min
    master = Aff([tau, lam2, th2] + list(mu),
                 [1.0, rho / eps, 1.0 / eps] + [1.0 / (eps * n * alpha)] * n)
    return master, audit
