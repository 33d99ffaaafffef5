"""Network data model, PTDF construction, and the deterministic dispatch set.

Conventions: one reference (slack) bus, line flow positive from `from_bus`
to `to_bus`, all powers in MW.  Piecewise generation costs are given as
tangent lines (slope $/MWh, intercept $) whose pointwise maximum is the
convex cost curve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .lp import Aff, GE, LE, EQ, LpModel


class GridError(ValueError):
    """Inconsistent network data."""


@dataclass(frozen=True)
class Bus:
    id: int
    load: float = 0.0

    def __post_init__(self):
        if self.load < 0 or not np.isfinite(self.load):
            raise GridError(f"bus {self.id}: load must be finite and nonnegative")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    reactance: float
    cap: float

    def __post_init__(self):
        if not (self.reactance > 0 and np.isfinite(self.reactance)):
            raise GridError(f"line {self.from_bus}-{self.to_bus}: reactance must be positive")
        if not (self.cap > 0 and np.isfinite(self.cap)):
            raise GridError(f"line {self.from_bus}-{self.to_bus}: cap must be positive")
        if self.from_bus == self.to_bus:
            raise GridError(f"line at bus {self.from_bus} is a self-loop")


@dataclass(frozen=True)
class Generator:
    id: str
    bus: int
    g_min: float
    g_max: float
    cost_pieces: tuple[tuple[float, float], ...]  # (slope, intercept)
    c_dn: float = 0.0  # down-reserve price
    c_up: float = 0.0  # up-reserve price

    def __post_init__(self):
        if not (self.g_min <= self.g_max):
            raise GridError(f"generator {self.id}: g_min > g_max")
        if not self.cost_pieces:
            raise GridError(f"generator {self.id}: needs at least one cost piece")
        for m, n in self.cost_pieces:
            if not (np.isfinite(m) and np.isfinite(n)):
                raise GridError(f"generator {self.id}: non-finite cost piece")
        if self.c_dn < 0 or self.c_up < 0:
            raise GridError(f"generator {self.id}: reserve prices must be nonnegative")

    def cost_at(self, p: float) -> float:
        return max(m * p + n for m, n in self.cost_pieces)


@dataclass(frozen=True)
class WindFarm:
    id: str
    bus: int
    capacity: float

    def __post_init__(self):
        if not (self.capacity > 0 and np.isfinite(self.capacity)):
            raise GridError(f"wind farm {self.id}: capacity must be positive")


@dataclass(frozen=True)
class NetworkModel:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    wind_farms: tuple[WindFarm, ...]
    slack_bus: int
    ptdf_g: np.ndarray = field(repr=False)  # |L| x |G|
    ptdf_w: np.ndarray = field(repr=False)  # |L| x |W|
    ptdf_b: np.ndarray = field(repr=False)  # |L| x |B|

    def __post_init__(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise GridError("duplicate bus ids")
        for m in (self.ptdf_g, self.ptdf_w, self.ptdf_b):
            m.setflags(write=False)

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def n_gens(self) -> int:
        return len(self.generators)

    @property
    def n_farms(self) -> int:
        return len(self.wind_farms)

    @property
    def loads(self) -> np.ndarray:
        return np.array([b.load for b in self.buses])

    @property
    def capacities(self) -> np.ndarray:
        return np.array([w.capacity for w in self.wind_farms])

    @property
    def line_caps(self) -> np.ndarray:
        return np.array([ln.cap for ln in self.lines])


def compute_ptdf(buses: tuple[Bus, ...], lines: tuple[Line, ...],
                 slack_bus: int) -> np.ndarray:
    """Nodal PTDF matrix (|L| x |B|): sensitivity of line flow to injection
    at each bus, with the slack bus absorbing the balance (slack column 0)."""
    pos = {b.id: i for i, b in enumerate(buses)}
    if slack_bus not in pos:
        raise GridError(f"slack bus {slack_bus} not in bus list")
    nb, nl = len(buses), len(lines)
    rows, cols, vals = [], [], []
    b_line = np.empty(nl)
    for k, ln in enumerate(lines):
        if ln.from_bus not in pos or ln.to_bus not in pos:
            raise GridError(f"line {ln.from_bus}-{ln.to_bus} references unknown bus")
        rows += [k, k]
        cols += [pos[ln.from_bus], pos[ln.to_bus]]
        vals += [1.0, -1.0]
        b_line[k] = 1.0 / ln.reactance
    inc = sp.csr_matrix((vals, (rows, cols)), shape=(nl, nb))
    n_comp, _ = connected_components(abs(inc.T) @ abs(inc), directed=False)
    if n_comp != 1:
        raise GridError(f"network is not connected ({n_comp} components)")
    b_bus = (inc.T @ sp.diags(b_line) @ inc).toarray()
    keep = [i for i in range(nb) if i != pos[slack_bus]]
    try:
        # rows: flow sensitivities of B_line * A restricted to non-slack buses
        sens = np.linalg.solve(b_bus[np.ix_(keep, keep)].T,
                               (sp.diags(b_line) @ inc).toarray()[:, keep].T).T
    except np.linalg.LinAlgError as exc:
        raise GridError("singular susceptance matrix") from exc
    ptdf = np.zeros((nl, nb))
    ptdf[:, keep] = sens
    return ptdf


def build_network(buses, lines, generators, wind_farms, slack_bus) -> NetworkModel:
    """Assemble a NetworkModel, deriving the device PTDF blocks."""
    buses = tuple(buses)
    lines = tuple(lines)
    generators = tuple(generators)
    wind_farms = tuple(wind_farms)
    pos = {b.id: i for i, b in enumerate(buses)}
    for g in generators:
        if g.bus not in pos:
            raise GridError(f"generator {g.id} at unknown bus {g.bus}")
    for w in wind_farms:
        if w.bus not in pos:
            raise GridError(f"wind farm {w.id} at unknown bus {w.bus}")
    gen_ids = [g.id for g in generators]
    if len(set(gen_ids)) != len(gen_ids):
        raise GridError("duplicate generator ids")
    farm_ids = [w.id for w in wind_farms]
    if len(set(farm_ids)) != len(farm_ids):
        raise GridError("duplicate wind farm ids")
    ptdf = compute_ptdf(buses, lines, slack_bus)
    ptdf_g = ptdf[:, [pos[g.bus] for g in generators]].copy() if generators else \
        np.zeros((len(lines), 0))
    ptdf_w = ptdf[:, [pos[w.bus] for w in wind_farms]].copy() if wind_farms else \
        np.zeros((len(lines), 0))
    return NetworkModel(buses=buses, lines=lines, generators=generators,
                        wind_farms=wind_farms, slack_bus=slack_bus,
                        ptdf_g=ptdf_g, ptdf_w=ptdf_w, ptdf_b=ptdf)


# -- grid file I/O -----------------------------------------------------------


def load_grid(path: str | Path) -> NetworkModel:
    with open(path) as fh:
        doc = json.load(fh)
    return network_from_dict(doc)


def save_grid(network: NetworkModel, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(network_to_dict(network), fh, indent=1)
        fh.write("\n")


def network_from_dict(doc: dict) -> NetworkModel:
    try:
        buses = [Bus(id=int(b["id"]), load=float(b.get("load", 0.0)))
                 for b in doc["buses"]]
        lines = [Line(from_bus=int(l["from"]), to_bus=int(l["to"]),
                      reactance=float(l["reactance"]), cap=float(l["cap"]))
                 for l in doc["lines"]]
        gens = [Generator(id=str(g["id"]), bus=int(g["bus"]),
                          g_min=float(g["g_min"]), g_max=float(g["g_max"]),
                          cost_pieces=tuple((float(m), float(n))
                                            for m, n in g["cost_pieces"]),
                          c_dn=float(g.get("c_dn", 0.0)),
                          c_up=float(g.get("c_up", 0.0)))
                for g in doc["generators"]]
        farms = [WindFarm(id=str(w["id"]), bus=int(w["bus"]),
                          capacity=float(w["capacity"]))
                 for w in doc.get("wind_farms", [])]
        slack = int(doc["slack_bus"])
    except (KeyError, TypeError) as exc:
        raise GridError(f"malformed grid document: {exc}") from exc
    return build_network(buses, lines, gens, farms, slack)


def network_to_dict(network: NetworkModel) -> dict:
    return {
        "slack_bus": network.slack_bus,
        "buses": [{"id": b.id, "load": b.load} for b in network.buses],
        "lines": [{"from": l.from_bus, "to": l.to_bus,
                   "reactance": l.reactance, "cap": l.cap} for l in network.lines],
        "generators": [{"id": g.id, "bus": g.bus, "g_min": g.g_min, "g_max": g.g_max,
                        "cost_pieces": [list(p) for p in g.cost_pieces],
                        "c_dn": g.c_dn, "c_up": g.c_up} for g in network.generators],
        "wind_farms": [{"id": w.id, "bus": w.bus, "capacity": w.capacity}
                       for w in network.wind_farms],
    }


# -- first-stage feasible set ------------------------------------------------


@dataclass(frozen=True)
class XVars:
    """Model indices of the first-stage decision blocks."""

    g: np.ndarray
    beta: np.ndarray
    r_dn: np.ndarray
    r_up: np.ndarray

    @property
    def last_index(self) -> int:
        return int(self.r_up[-1]) if len(self.r_up) else -1


def deterministic_rows(model: LpModel, network: NetworkModel, f: np.ndarray) -> XVars:
    """Create g/beta/r variables and the wind-independent dispatch constraints:
    reserve-adjusted capacity limits, power balance at the forecast, and the
    participation-factor simplex."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (network.n_farms,):
        raise GridError("forecast length does not match wind farm count")
    ng = network.n_gens
    g_idx = np.empty(ng, dtype=np.int64)
    b_idx = np.empty(ng, dtype=np.int64)
    rd_idx = np.empty(ng, dtype=np.int64)
    ru_idx = np.empty(ng, dtype=np.int64)
    for j, gen in enumerate(network.generators):
        g_idx[j] = model.add_var(f"g_{j}", lb=-np.inf, ub=np.inf)
        b_idx[j] = model.add_var(f"beta_{j}", lb=0.0, ub=np.inf)
        rd_idx[j] = model.add_var(f"rD_{j}", lb=0.0, ub=np.inf)
        ru_idx[j] = model.add_var(f"rU_{j}", lb=0.0, ub=np.inf)
    for j, gen in enumerate(network.generators):
        model.add_row([g_idx[j], ru_idx[j]], [1.0, 1.0], LE, gen.g_max, f"cap_up_{gen.id}")
        model.add_row([g_idx[j], rd_idx[j]], [1.0, -1.0], GE, gen.g_min, f"cap_dn_{gen.id}")
    total_load = float(network.loads.sum())
    model.add_row(g_idx, np.ones(ng), EQ, total_load - float(f.sum()), "balance")
    model.add_row(b_idx, np.ones(ng), EQ, 1.0, "beta_simplex")
    return XVars(g=g_idx, beta=b_idx, r_dn=rd_idx, r_up=ru_idx)


def x_residual(network: NetworkModel, f: np.ndarray, g: np.ndarray, beta: np.ndarray,
               r_dn: np.ndarray, r_up: np.ndarray) -> float:
    """Max violation of the deterministic dispatch set at a candidate point."""
    g_max = np.array([gen.g_max for gen in network.generators])
    g_min = np.array([gen.g_min for gen in network.generators])
    parts = [
        np.max(g + r_up - g_max, initial=0.0),
        np.max(g_min - (g - r_dn), initial=0.0),
        abs(g.sum() + float(np.sum(f)) - network.loads.sum()),
        abs(beta.sum() - 1.0),
        np.max(-beta, initial=0.0),
        np.max(-r_dn, initial=0.0),
        np.max(-r_up, initial=0.0),
    ]
    return float(max(parts))


def cost_epigraph_rows(model: LpModel, pieces, arg: Aff, t_idx: int, tag: str) -> None:
    """Rows t >= m * arg + n for each tangent piece (m, n)."""
    for s, (m, n) in enumerate(pieces):
        combined = Aff.single(t_idx, 1.0).plus(arg.scaled(-m))
        model.add_row_aff(combined, GE, n, f"{tag}_p{s}")


def reserve_cost_aff(network: NetworkModel, xv: XVars) -> Aff:
    """Reserve procurement cost c_dn . r_dn + c_up . r_up as an expression."""
    idx = list(xv.r_dn) + list(xv.r_up)
    coef = [gen.c_dn for gen in network.generators] + \
           [gen.c_up for gen in network.generators]
    return Aff(idx, coef, 0.0)
