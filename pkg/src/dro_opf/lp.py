"""Sparse LP container, scipy/HiGHS solve wrapper, and LP-format export.

The model object stores rows incrementally in CSR-like typed arrays so that
very large models (millions of rows) can be assembled without per-row Python
object overhead.  Variables are identified by insertion order; names exist
for export and debugging only.
"""

from __future__ import annotations

import time
from array import array
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

INF = float("inf")

LE = "<="
EQ = "="
GE = ">="

_SENSE_CODE = {LE: -1, EQ: 0, GE: 1}
_SENSE_STR = {-1: LE, 0: EQ, 1: GE}

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical-failure"


class LpError(ValueError):
    """Malformed model or solver misuse."""


class Aff:
    """Affine expression sum_t coef[t] * x[idx[t]] + const over model variables."""

    __slots__ = ("idx", "coef", "const")

    def __init__(self, idx: Sequence[int], coef: Sequence[float], const: float = 0.0):
        self.idx = np.asarray(idx, dtype=np.int64)
        self.coef = np.asarray(coef, dtype=np.float64)
        if self.idx.shape != self.coef.shape:
            raise LpError("index/coefficient length mismatch")
        self.const = float(const)

    @classmethod
    def constant(cls, c: float) -> "Aff":
        return cls([], [], c)

    @classmethod
    def single(cls, idx: int, coef: float = 1.0, const: float = 0.0) -> "Aff":
        return cls([idx], [coef], const)

    @classmethod
    def combine(cls, terms: dict[int, float], const: float = 0.0) -> "Aff":
        items = sorted(terms.items())
        return cls([i for i, _ in items], [c for _, c in items], const)

    def scaled(self, s: float) -> "Aff":
        return Aff(self.idx.copy(), self.coef * s, self.const * s)

    def plus(self, other: "Aff") -> "Aff":
        terms: dict[int, float] = {}
        for i, c in zip(self.idx, self.coef):
            terms[int(i)] = terms.get(int(i), 0.0) + float(c)
        for i, c in zip(other.idx, other.coef):
            terms[int(i)] = terms.get(int(i), 0.0) + float(c)
        return Aff.combine(terms, self.const + other.const)

    def value(self, x: np.ndarray) -> float:
        return float(x[self.idx] @ self.coef + self.const)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Aff({len(self.idx)} terms, const={self.const})"


@dataclass
class SolverConfig:
    """Backend selection and tolerances for a single LP solve."""

    method: str = "highs-ipm"
    feas_tol: float = 1e-6
    opt_tol: float = 1e-8
    time_limit: float | None = None
    presolve: bool = True

    def __post_init__(self):
        if self.method not in ("highs", "highs-ds", "highs-ipm"):
            raise LpError(f"unknown LP method {self.method!r}")
        if not (self.feas_tol > 0 and self.opt_tol > 0):
            raise LpError("tolerances must be positive")


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int
    wall_time: float
    max_violation: float = float("nan")
    message: str = ""


class LpModel:
    """Incrementally assembled sparse LP (minimization)."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self._names: list[str] = []
        self._name_to_idx: dict[str, int] = {}
        self._lb = array("d")
        self._ub = array("d")
        self._obj = array("d")
        self.obj_const = 0.0
        # CSR-style row storage
        self._indptr = array("q", [0])
        self._cols = array("q")
        self._vals = array("d")
        self._sense = array("b")
        self._rhs = array("d")
        self._tags: list[str] = []

    # -- variables ---------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self._names)

    @property
    def n_rows(self) -> int:
        return len(self._rhs)

    @property
    def nnz(self) -> int:
        return len(self._vals)

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, obj: float = 0.0) -> int:
        if name in self._name_to_idx:
            raise LpError(f"duplicate variable name {name!r}")
        if not (lb <= ub):
            raise LpError(f"variable {name!r} has empty bound interval [{lb}, {ub}]")
        idx = len(self._names)
        self._names.append(name)
        self._name_to_idx[name] = idx
        self._lb.append(lb)
        self._ub.append(ub)
        self._obj.append(obj)
        return idx

    def var_index(self, name: str) -> int:
        return self._name_to_idx[name]

    def var_name(self, idx: int) -> str:
        return self._names[idx]

    def set_bounds(self, idx: int, lb: float, ub: float) -> None:
        if not (lb <= ub):
            raise LpError("empty bound interval")
        self._lb[idx] = lb
        self._ub[idx] = ub

    def add_obj(self, idx: int, coef: float) -> None:
        self._obj[idx] += coef

    def add_obj_aff(self, expr: Aff) -> None:
        for i, c in zip(expr.idx, expr.coef):
            self._obj[int(i)] += float(c)
        self.obj_const += expr.const

    # -- rows ----------------------------------------------------------------

    def add_row(self, cols: Sequence[int], vals: Sequence[float], sense: str, rhs: float,
                tag: str = "") -> int:
        self._cols.extend(int(c) for c in cols)
        self._vals.extend(float(v) for v in vals)
        self._indptr.append(len(self._cols))
        self._sense.append(_SENSE_CODE[sense])
        self._rhs.append(rhs)
        self._tags.append(tag)
        return len(self._rhs) - 1

    def add_row_aff(self, expr: Aff, sense: str, rhs: float, tag: str = "") -> int:
        # expr sense rhs  with the constant moved to the right-hand side
        return self.add_row(expr.idx, expr.coef, sense, rhs - expr.const, tag)

    def set_rhs(self, row: int, rhs: float) -> None:
        self._rhs[row] = rhs

    def row_tag(self, row: int) -> str:
        return self._tags[row]

    # -- assembly ------------------------------------------------------------

    def to_arrays(self):
        """Assemble (c, A csr, sense, rhs, lb, ub); duplicate entries are summed."""
        n = self.n_vars
        a = sp.csr_matrix(
            (np.frombuffer(self._vals, dtype=np.float64),
             np.frombuffer(self._cols, dtype=np.int64),
             np.frombuffer(self._indptr, dtype=np.int64)),
            shape=(self.n_rows, n),
            copy=True,
        )
        a.sum_duplicates()
        c = np.frombuffer(self._obj, dtype=np.float64).copy()
        sense = np.frombuffer(self._sense, dtype=np.int8).copy()
        rhs = np.frombuffer(self._rhs, dtype=np.float64).copy()
        lb = np.frombuffer(self._lb, dtype=np.float64).copy()
        ub = np.frombuffer(self._ub, dtype=np.float64).copy()
        return c, a, sense, rhs, lb, ub

    def validate(self) -> None:
        """Structural invariants; raises LpError on the first breach."""
        cols = np.frombuffer(self._cols, dtype=np.int64)
        vals = np.frombuffer(self._vals, dtype=np.float64)
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise LpError("row references unknown variable index")
        if len(vals) and not np.all(np.isfinite(vals)):
            raise LpError("non-finite row coefficient")
        obj = np.frombuffer(self._obj, dtype=np.float64)
        if len(obj) and not np.all(np.isfinite(obj)):
            raise LpError("non-finite objective coefficient")
        rhs = np.frombuffer(self._rhs, dtype=np.float64)
        if len(rhs) and not np.all(np.isfinite(rhs)):
            raise LpError("non-finite right-hand side")
        nontrivial = [t for t in self._tags if t]
        if len(set(nontrivial)) != len(nontrivial):
            seen, dup = set(), None
            for t in nontrivial:
                if t in seen:
                    dup = t
                    break
                seen.add(t)
            raise LpError(f"duplicate row tag {dup!r}")


def solve(model: LpModel, config: SolverConfig | None = None) -> LpSolution:
    """Solve a minimization LP; statuses: optimal / infeasible / unbounded /
    numerical-failure.  A claimed-optimal point whose primal residual exceeds
    10x the feasibility tolerance is downgraded to numerical-failure."""
    cfg = config or SolverConfig()
    c, a, sense, rhs, lb, ub = model.to_arrays()

    le = sense == -1
    ge = sense == 1
    eq = sense == 0
    a_ub_parts, b_ub_parts = [], []
    if le.any():
        a_ub_parts.append(a[le])
        b_ub_parts.append(rhs[le])
    if ge.any():
        a_ub_parts.append(-a[ge])
        b_ub_parts.append(-rhs[ge])
    a_ub = sp.vstack(a_ub_parts, format="csr") if a_ub_parts else None
    b_ub = np.concatenate(b_ub_parts) if b_ub_parts else None
    a_eq = a[eq] if eq.any() else None
    b_eq = rhs[eq] if eq.any() else None

    options: dict = {"presolve": cfg.presolve, "disp": False,
                     "primal_feasibility_tolerance": cfg.feas_tol,
                     "dual_feasibility_tolerance": cfg.feas_tol}
    if cfg.method == "highs-ipm":
        options["ipm_optimality_tolerance"] = cfg.opt_tol
    if cfg.time_limit is not None:
        options["time_limit"] = cfg.time_limit

    t0 = time.perf_counter()
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=np.column_stack([lb, ub]), method=cfg.method,
                  options=options)
    wall = time.perf_counter() - t0

    status = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, NUMERICAL_FAILURE)
    x = np.asarray(res.x, dtype=np.float64) if res.x is not None else None
    objective = None
    max_viol = float("nan")
    if status == OPTIMAL:
        if x is None:
            status = NUMERICAL_FAILURE
        else:
            ax = a @ x
            viol = np.zeros(3)
            if le.any():
                viol[0] = float(np.max(ax[le] - rhs[le], initial=0.0))
            if ge.any():
                viol[1] = float(np.max(rhs[ge] - ax[ge], initial=0.0))
            if eq.any():
                viol[2] = float(np.max(np.abs(ax[eq] - rhs[eq]), initial=0.0))
            bound_viol = max(float(np.max(lb - x, initial=0.0)),
                             float(np.max(x - ub, initial=0.0)))
            max_viol = max(float(viol.max()), bound_viol)
            objective = float(res.fun) + model.obj_const
            if max_viol > 10.0 * cfg.feas_tol:
                status = NUMERICAL_FAILURE
                objective = None
    nit = int(getattr(res, "nit", 0) or 0)
    return LpSolution(status=status, x=x, objective=objective, iterations=nit,
                      wall_time=wall, max_violation=max_viol,
                      message=str(getattr(res, "message", "")))


# -- LP-format text export ---------------------------------------------------


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _term(coef: float, name: str, first: bool) -> str:
    sign = "-" if coef < 0 else ("" if first else "+")
    mag = abs(coef)
    body = name if mag == 1.0 else f"{_fmt(mag)} {name}"
    return f"{sign} {body}" if (sign and not first) else f"{sign}{body}"


def _expr_text(cols: np.ndarray, vals: np.ndarray, names: list[str]) -> str:
    # merge duplicate columns, drop exact zeros, keep insertion order of first use
    order: list[int] = []
    acc: dict[int, float] = {}
    for cidx, v in zip(cols, vals):
        ci = int(cidx)
        if ci not in acc:
            acc[ci] = 0.0
            order.append(ci)
        acc[ci] += float(v)
    parts: list[str] = []
    for ci in order:
        v = acc[ci]
        if v == 0.0:
            continue
        parts.append(_term(v, names[ci], first=not parts))
    if not parts:
        return "0 " + (names[int(cols[0])] if len(cols) else "")
    return " ".join(parts)


def export(model: LpModel) -> str:
    """Deterministic CPLEX-style LP text for the model."""
    out: list[str] = [f"\\ {model.name}", "Minimize"]
    obj = np.frombuffer(model._obj, dtype=np.float64)
    nz = np.nonzero(obj)[0]
    text = _expr_text(nz, obj[nz], model._names) if len(nz) else ""
    if model.obj_const:
        const_term = _term(model.obj_const, "", first=not text).rstrip()
        text = f"{text} {const_term}".strip() if text else _fmt(model.obj_const)
    out.append(f" obj: {text}".rstrip())
    out.append("Subject To")
    indptr = np.frombuffer(model._indptr, dtype=np.int64)
    cols = np.frombuffer(model._cols, dtype=np.int64)
    vals = np.frombuffer(model._vals, dtype=np.float64)
    for r in range(model.n_rows):
        lo, hi = indptr[r], indptr[r + 1]
        if hi == lo:
            raise LpError(f"row {r} has no terms")
        body = _expr_text(cols[lo:hi], vals[lo:hi], model._names)
        tag = model._tags[r] or f"c{r}"
        out.append(f" {tag}: {body} {_SENSE_STR[model._sense[r]]} {_fmt(model._rhs[r])}")
    out.append("Bounds")
    for i, nm in enumerate(model._names):
        lo, hi = model._lb[i], model._ub[i]
        if lo == -INF and hi == INF:
            out.append(f" {nm} free")
        elif hi == INF:
            out.append(f" {nm} >= {_fmt(lo)}")
        elif lo == -INF:
            out.append(f" -infinity <= {nm} <= {_fmt(hi)}")
        else:
            out.append(f" {_fmt(lo)} <= {nm} <= {_fmt(hi)}")
    out.append("End")
    return "\n".join(out) + "\n"


def parse_lp_text(text: str) -> LpModel:
    """Parse the dialect written by export(); used for export round-trip checks."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("\\")]
    section = None
    model = LpModel("parsed")
    pending_rows: list[tuple[str, str, str, float]] = []  # tag, expr, sense, rhs
    obj_expr = ""
    bounds: dict[str, tuple[float, float]] = {}
    var_order: list[str] = []

    def note_vars(expr: str):
        for tok in expr.replace("+", " ").replace("-", " ").split():
            if not _is_number(tok) and tok not in bounds:
                bounds[tok] = (0.0, INF)
                var_order.append(tok)

    for ln in lines:
        s = ln.strip()
        low = s.lower()
        if low == "minimize":
            section = "obj"
            continue
        if low == "subject to":
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low == "end":
            break
        if section == "obj":
            if ":" in s:
                s = s.split(":", 1)[1].strip()
            obj_expr += " " + s
        elif section == "rows":
            tag, body = s.split(":", 1)
            for op in (LE, GE, EQ):
                if op in body:
                    expr, rhs = body.rsplit(op, 1)
                    pending_rows.append((tag.strip(), expr.strip(), op, float(rhs)))
                    break
        elif section == "bounds":
            if s.endswith(" free"):
                nm = s[: -len(" free")].strip()
                bounds[nm] = (-INF, INF)
                if nm not in var_order:
                    var_order.append(nm)
            elif "<=" in s:
                parts = [p.strip() for p in s.split("<=")]
                if len(parts) == 3:
                    nm = parts[1]
                    lo = -INF if parts[0] in ("-infinity", "-inf") else float(parts[0])
                    hi = INF if parts[2] in ("infinity", "inf") else float(parts[2])
                    bounds[nm] = (lo, hi)
                else:
                    nm = parts[0]
                    bounds[nm] = (bounds.get(nm, (0.0, INF))[0], float(parts[1]))
                if nm not in var_order:
                    var_order.append(nm)
            elif ">=" in s:
                nm, lo = [p.strip() for p in s.split(">=")]
                bounds[nm] = (float(lo), INF)
                if nm not in var_order:
                    var_order.append(nm)

    note_vars(obj_expr)
    for _, expr, _, _ in pending_rows:
        note_vars(expr)
    for nm in var_order:
        lo, hi = bounds[nm]
        model.add_var(nm, lb=lo, ub=hi)
    obj_terms, obj_const = _parse_expr(obj_expr, model)
    for i, c in obj_terms.items():
        model.add_obj(i, c)
    model.obj_const = obj_const
    for tag, expr, op, rhs in pending_rows:
        terms, const = _parse_expr(expr, model)
        items = sorted(terms.items())
        model.add_row([i for i, _ in items], [c for _, c in items], op, rhs - const, tag)
    return model


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_expr(expr: str, model: LpModel) -> tuple[dict[int, float], float]:
    toks = expr.replace("+", " + ").replace("-", " - ").split()
    terms: dict[int, float] = {}
    const = 0.0
    sign = 1.0
    coef: float | None = None
    for tok in toks:
        if tok == "+":
            if coef is not None:
                const += sign * coef
                coef = None
            sign = 1.0
        elif tok == "-":
            if coef is not None:
                const += sign * coef
                coef = None
            sign = -1.0
        elif _is_number(tok):
            coef = float(tok) if coef is None else coef * float(tok)
        else:
            i = model.var_index(tok)
            c = sign * (1.0 if coef is None else coef)
            terms[i] = terms.get(i, 0.0) + c
            coef = None
            sign = 1.0
    if coef is not None:
        const += sign * coef
    return terms, const
