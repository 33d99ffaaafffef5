"""Shared builders for small test systems."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from dro_opf.grid import Bus, Generator, Line, WindFarm, build_network, load_grid
from dro_opf.uncertainty import Context, JointSampleSet

CASES = Path(__file__).resolve().parents[1] / "src" / "dro_opf" / "cases"


def three_bus(cap12=80.0, cap13=80.0, cap23=80.0, load3=100.0, wind_cap=40.0):
    """Triangle network: two generators, one wind farm, one load."""
    buses = [Bus(id=1), Bus(id=2), Bus(id=3, load=load3)]
    lines = [Line(from_bus=1, to_bus=2, reactance=0.1, cap=cap12),
             Line(from_bus=1, to_bus=3, reactance=0.1, cap=cap13),
             Line(from_bus=2, to_bus=3, reactance=0.1, cap=cap23)]
    gens = [Generator(id="g1", bus=1, g_min=0.0, g_max=120.0,
                      cost_pieces=((10.0, 0.0), (14.0, -80.0)), c_dn=3.0, c_up=3.0),
            Generator(id="g2", bus=2, g_min=0.0, g_max=120.0,
                      cost_pieces=((18.0, 0.0), (25.0, -200.0)), c_dn=5.0, c_up=5.0)]
    farms = [WindFarm(id="w1", bus=3, capacity=wind_cap)]
    return build_network(buses, lines, gens, farms, slack_bus=1)


def random_three_bus(rng: np.random.Generator):
    """Randomized triangle instance with generous capacities."""
    load = float(rng.uniform(60.0, 140.0))
    wind_cap = float(rng.uniform(20.0, 60.0))
    buses = [Bus(id=1), Bus(id=2, load=load * 0.3), Bus(id=3, load=load * 0.7)]
    lines = [Line(from_bus=1, to_bus=2, reactance=float(rng.uniform(0.05, 0.2)),
                  cap=float(rng.uniform(150.0, 250.0))),
             Line(from_bus=1, to_bus=3, reactance=float(rng.uniform(0.05, 0.2)),
                  cap=float(rng.uniform(150.0, 250.0))),
             Line(from_bus=2, to_bus=3, reactance=float(rng.uniform(0.05, 0.2)),
                  cap=float(rng.uniform(150.0, 250.0)))]
    m1 = float(rng.uniform(8.0, 15.0))
    m2 = float(rng.uniform(15.0, 30.0))
    gens = [Generator(id="g1", bus=1, g_min=0.0, g_max=load * 2.0,
                      cost_pieces=((m1, 0.0), (m1 * 1.5, -40.0)),
                      c_dn=float(rng.uniform(1.0, 5.0)),
                      c_up=float(rng.uniform(1.0, 5.0))),
            Generator(id="g2", bus=2, g_min=0.0, g_max=load * 2.0,
                      cost_pieces=((m2, 0.0), (m2 * 1.4, -60.0)),
                      c_dn=float(rng.uniform(1.0, 5.0)),
                      c_up=float(rng.uniform(1.0, 5.0)))]
    farms = [WindFarm(id="w1", bus=3, capacity=wind_cap)]
    return build_network(buses, lines, gens, farms, slack_bus=1)


def random_samples(rng: np.random.Generator, network, n: int) -> JointSampleSet:
    """Joint samples with contexts spread over [0.1, 0.9] capacity."""
    caps = network.capacities
    f_pu = rng.uniform(0.1, 0.9, size=(n, network.n_farms))
    z = f_pu * caps
    realized = np.clip(f_pu + rng.normal(0.0, 0.15, size=f_pu.shape), 0.0, 1.0)
    w = (realized - f_pu) * caps
    return JointSampleSet(z_hat=z, w_hat=w)


def mid_context(network) -> Context:
    f = 0.6 * network.capacities
    return Context.from_capacities(f, network.capacities)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    outcomes = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"),
                          ("error", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if outcomes.get(name) != "FAIL":
                outcomes[name] = label
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(outcomes):
        parts = name.split("_")  # test_criterion_<num>_<slug words>
        num = int(parts[2])
        slug = " ".join(parts[3:])
        terminalreporter.write_line(f"criterion {num:2d} ({slug}): {outcomes[name]}")


@pytest.fixture(scope="session")
def case14():
    return load_grid(CASES / "case14.json")


@pytest.fixture(scope="session")
def case118():
    return load_grid(CASES / "case118.json")
