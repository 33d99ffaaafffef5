#!/usr/bin/env python3
"""Build the bundled grid cases, the default forecast pool, and the sweep
configs.

case14: the classic 14-bus test topology (20 branches) with three wind
farms added and three-piece tangent costs fitted to quadratic curves.

case118: a synthetic 118-bus meshed system sized like the large benchmark
used for the headline sweeps: 186 branches, 54 generators, 8 wind farms at
fixed buses, loads scaled so the medium wind preset (8 x 200 MW at 0.9 pu
forecast) covers about 63 percent of demand.  Topology, loads, and costs
are drawn from a pinned RNG, then line capacities are calibrated so a
proportional dispatch clears every branch with margin at zero, minimum,
and maximum wind.

Run from the repository root:  python3 scripts/make_cases.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dro_opf.grid import Bus, Generator, Line, WindFarm, build_network, save_grid

CASES_DIR = Path(__file__).resolve().parents[1] / "src" / "dro_opf" / "cases"


def tangent_pieces(c2: float, c1: float, p_max: float, n_pieces: int = 3):
    """Tangents to c2 p^2 + c1 p at evenly spaced supports; their maximum
    recovers the quadratic to within c2 (p_max / (n-1))^2 / 4."""
    supports = np.linspace(0.0, p_max, n_pieces)
    pieces = []
    for p in supports:
        m = 2.0 * c2 * p + c1
        n = -c2 * p * p
        pieces.append((round(float(m), 4), round(float(n), 4)))
    uniq = sorted(set(pieces))
    return uniq


def make_case14() -> None:
    branches = [
        (1, 2, 0.05917), (1, 5, 0.22304), (2, 3, 0.19797), (2, 4, 0.17632),
        (2, 5, 0.17388), (3, 4, 0.17103), (4, 5, 0.04211), (4, 7, 0.20912),
        (4, 9, 0.55618), (5, 6, 0.25202), (6, 11, 0.19890), (6, 12, 0.25581),
        (6, 13, 0.13027), (7, 8, 0.17615), (7, 9, 0.11001), (9, 10, 0.08450),
        (9, 14, 0.27038), (10, 11, 0.19207), (12, 13, 0.19988), (13, 14, 0.34802),
    ]
    loads = {2: 21.7, 3: 94.2, 4: 47.8, 5: 7.6, 6: 11.2, 9: 29.5, 10: 9.0,
             11: 3.5, 12: 6.1, 13: 13.5, 14: 14.9}
    buses = [Bus(id=b, load=loads.get(b, 0.0)) for b in range(1, 15)]
    gen_data = [
        ("g1", 1, 332.4, 0.043, 20.0),
        ("g2", 2, 140.0, 0.25, 20.0),
        ("g3", 3, 100.0, 0.01, 40.0),
        ("g6", 6, 100.0, 0.01, 40.0),
        ("g8", 8, 100.0, 0.01, 40.0),
    ]
    gens = []
    for gid, bus, p_max, c2, c1 in gen_data:
        pieces = tangent_pieces(c2, c1, p_max)
        mid_slope = 2.0 * c2 * (p_max / 2.0) + c1
        price = round(0.4 * mid_slope, 2)
        gens.append(Generator(id=gid, bus=bus, g_min=0.0, g_max=p_max,
                              cost_pieces=tuple(pieces), c_dn=price, c_up=price))
    farms = [WindFarm(id="w1", bus=4, capacity=60.0),
             WindFarm(id="w2", bus=9, capacity=60.0),
             WindFarm(id="w3", bus=13, capacity=60.0)]
    caps = calibrate_caps(buses, branches, gens, farms, slack=1,
                          floor=30.0, margin=1.5)
    lines = [Line(from_bus=f, to_bus=t, reactance=x, cap=c)
             for (f, t, x), c in zip(branches, caps)]
    network = build_network(buses, lines, gens, farms, slack_bus=1)
    save_grid(network, CASES_DIR / "case14.json")
    print(f"case14: {network.n_buses} buses, {network.n_lines} lines, "
          f"{network.n_gens} gens, load {network.loads.sum():.1f} MW")


def calibrate_caps(buses, branches, gens, farms, slack, floor, margin):
    """Line capacities covering a proportional dispatch at zero, minimum,
    and maximum wind output (forecast at 0.9 of capacity)."""
    probe_lines = [Line(from_bus=f, to_bus=t, reactance=x, cap=1.0)
                   for f, t, x in branches]
    network = build_network(buses, probe_lines, gens, farms, slack_bus=slack)
    cap_w = network.capacities
    f = 0.9 * cap_w
    load = network.loads
    p_max = np.array([g.g_max for g in gens])
    worst = np.zeros(network.n_lines)
    for wind in (f, np.zeros_like(f), cap_w):
        net_load = load.sum() - wind.sum()
        g = p_max * (net_load / p_max.sum())
        flow = network.ptdf_g @ g + network.ptdf_w @ wind - network.ptdf_b @ load
        worst = np.maximum(worst, np.abs(flow))
    return [float(max(floor, np.ceil(margin * w / 5.0) * 5.0)) for w in worst]


def make_case118(seed: int = 118) -> None:
    rng = np.random.default_rng(seed)
    n_bus, n_line, n_gen = 118, 186, 54
    wind_buses = [2, 16, 33, 37, 55, 67, 83, 116]

    # meshed topology: random tree + extra chords, no duplicates
    edges: set[tuple[int, int]] = set()
    order = rng.permutation(np.arange(2, n_bus + 1))
    connected = [1]
    for b in order:
        target = int(connected[rng.integers(len(connected))])
        edges.add((min(int(b), target), max(int(b), target)))
        connected.append(int(b))
    while len(edges) < n_line:
        a, b = rng.integers(1, n_bus + 1, size=2)
        if a == b:
            continue
        edges.add((min(int(a), int(b)), max(int(a), int(b))))
    branch_list = sorted(edges)
    react = np.clip(rng.lognormal(mean=np.log(0.08), sigma=0.5, size=n_line),
                    0.02, 0.35)
    branches = [(f, t, round(float(x), 5)) for (f, t), x in zip(branch_list, react)]

    # loads at ~85 percent of buses, total scaled to put medium wind at 63%
    total_load = 8 * 200.0 * 0.9 / 0.63
    is_load = rng.random(n_bus) < 0.85
    raw = rng.gamma(shape=2.0, scale=1.0, size=n_bus) * is_load
    load_values = raw / raw.sum() * total_load
    buses = [Bus(id=b + 1, load=round(float(load_values[b]), 2))
             for b in range(n_bus)]

    gen_buses = rng.choice(np.arange(1, n_bus + 1), size=n_gen, replace=False)
    gen_buses.sort()
    size_class = rng.choice([40.0, 100.0, 200.0, 300.0, 420.0], size=n_gen,
                            p=[0.3, 0.25, 0.2, 0.15, 0.1])
    p_max = size_class * rng.uniform(0.8, 1.2, size=n_gen)
    # keep ample reserve margin above peak net load
    p_max *= 1.9 * total_load / p_max.sum()
    c1 = rng.uniform(15.0, 45.0, size=n_gen)
    c2 = rng.uniform(200.0, 900.0, size=n_gen) / p_max / 10.0
    gens = []
    for j in range(n_gen):
        pieces = tangent_pieces(float(c2[j]), float(c1[j]), float(p_max[j]))
        mid_slope = 2.0 * c2[j] * (p_max[j] / 2.0) + c1[j]
        price = round(0.4 * float(mid_slope), 2)
        gens.append(Generator(id=f"g{j+1}", bus=int(gen_buses[j]), g_min=0.0,
                              g_max=round(float(p_max[j]), 2),
                              cost_pieces=tuple(pieces), c_dn=price, c_up=price))
    farms = [WindFarm(id=f"w{k+1}", bus=b, capacity=200.0)
             for k, b in enumerate(wind_buses)]
    caps = calibrate_caps(buses, branches, gens, farms, slack=1,
                          floor=60.0, margin=1.3)
    lines = [Line(from_bus=f, to_bus=t, reactance=x, cap=c)
             for (f, t, x), c in zip(branches, caps)]
    network = build_network(buses, lines, gens, farms, slack_bus=1)
    save_grid(network, CASES_DIR / "case118.json")
    print(f"case118: {network.n_buses} buses, {network.n_lines} lines, "
          f"{network.n_gens} gens, load {network.loads.sum():.1f} MW, "
          f"gen capacity {sum(g.g_max for g in gens):.0f} MW")


def make_pool(seed: int = 7, size: int = 2000) -> None:
    """Per-unit forecast pool: mixture spanning low, mid, and high output."""
    rng = np.random.default_rng(seed)
    comp = rng.choice(3, size=size, p=[0.45, 0.35, 0.20])
    vals = np.where(comp == 0, rng.beta(1.2, 3.5, size=size),
                    np.where(comp == 1, rng.beta(4.0, 4.0, size=size),
                             rng.beta(5.0, 1.5, size=size)))
    np.savetxt(CASES_DIR / "pool_default.txt", vals, fmt="%.6f")
    print(f"pool: {size} values, mean {vals.mean():.3f}, std {vals.std():.3f}")


def make_configs() -> None:
    scripts = Path(__file__).resolve().parent
    base = {
        "grid_file": "../src/dro_opf/cases/case118.json",
        "methods": ["drotrimm", "drow", "scena"],
        "n_list": [100, 300],
        "rho_excess_list": [0.0, 2.0, 5.0, 10.0, 20.0, 50.0],
        "runs": 20,
        "eps": 0.1,
        "test_size": 1000,
        "master_seed": 2024,
        "workers": 4,
    }
    medium = dict(base, context=[180.0] * 8, capacities=[200.0] * 8)
    high = dict(base, context=[225.0] * 8, capacities=[250.0] * 8)
    ci = dict(base, grid_file="../src/dro_opf/cases/case14.json",
              context=[54.0] * 3, capacities=[60.0] * 3,
              n_list=[100], runs=10, test_size=500,
              rho_excess_list=[0.0, 1.0, 3.0, 10.0, 30.0])
    for name, cfg in (("medium", medium), ("high", high), ("ci", ci)):
        with open(scripts / f"config_{name}.json", "w") as fh:
            json.dump(cfg, fh, indent=1)
            fh.write("\n")
    print("configs: medium, high, ci")


if __name__ == "__main__":
    CASES_DIR.mkdir(parents=True, exist_ok=True)
    make_pool()
    make_case14()
    make_case118()
    make_configs()
