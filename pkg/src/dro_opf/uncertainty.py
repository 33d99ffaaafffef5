"""Sample sets, conditional supports, trimming weights, and transport budgets.

The ambiguity machinery works on the l1 ground metric throughout: distances
between contexts are l1, distances from an error sample to the conditional
support are l1 point-to-box distances, and the minimum transportation budget
is the partial mass-moving cost of pushing the retained (1-alpha) fraction
of the empirical distribution onto the conditional support.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class UncertaintyError(ValueError):
    """Invalid sample data or weight vectors."""


class BudgetBelowMinimum(UncertaintyError):
    """Requested transport budget cannot reach the conditional support."""

    def __init__(self, rho: float, rho_min: float, where: str = ""):
        self.rho = rho
        self.rho_min = rho_min
        suffix = f" in {where}" if where else ""
        super().__init__(
            f"budget {rho:.6g} is below the minimum {rho_min:.6g}{suffix}")


@dataclass
class JointSampleSet:
    """N joint context/error observations, one row per sample."""

    z_hat: np.ndarray  # (N, W) context observations
    w_hat: np.ndarray  # (N, W) forecast-error observations
    farm_ids: tuple[str, ...] = ()

    def __post_init__(self):
        self.z_hat = np.atleast_2d(np.asarray(self.z_hat, dtype=np.float64))
        self.w_hat = np.atleast_2d(np.asarray(self.w_hat, dtype=np.float64))
        if self.z_hat.shape != self.w_hat.shape:
            raise UncertaintyError("context and error blocks must have equal shape")
        if self.z_hat.size == 0:
            raise UncertaintyError("sample set is empty")
        if not (np.all(np.isfinite(self.z_hat)) and np.all(np.isfinite(self.w_hat))):
            raise UncertaintyError("samples must be finite")
        if not self.farm_ids:
            self.farm_ids = tuple(f"w{m+1}" for m in range(self.z_hat.shape[1]))
        if len(self.farm_ids) != self.z_hat.shape[1]:
            raise UncertaintyError("farm id count does not match sample width")

    @property
    def n(self) -> int:
        return self.z_hat.shape[0]

    @property
    def n_farms(self) -> int:
        return self.z_hat.shape[1]

    @property
    def omega_hat(self) -> np.ndarray:
        """Aggregate error per sample (row sums of the error block)."""
        return self.w_hat.sum(axis=1)


@dataclass(frozen=True)
class Context:
    """Point forecast and the conditional error support it induces."""

    f: np.ndarray  # (W,) point forecast, MW
    box_lo: np.ndarray  # (W,) elementwise support lower corner
    box_hi: np.ndarray  # (W,) elementwise support upper corner

    def __post_init__(self):
        for name in ("f", "box_lo", "box_hi"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=np.float64))
        if not (self.f.shape == self.box_lo.shape == self.box_hi.shape):
            raise UncertaintyError("context fields must share shape")
        if not np.all(np.isfinite(self.box_lo)) or not np.all(np.isfinite(self.box_hi)):
            raise UncertaintyError("support box must be bounded")
        if np.any(self.box_lo > self.box_hi):
            raise UncertaintyError("empty support box")
        self.f.setflags(write=False)
        self.box_lo.setflags(write=False)
        self.box_hi.setflags(write=False)

    @classmethod
    def from_capacities(cls, f, capacities) -> "Context":
        """Error support [-f, cap - f] per farm: realized power stays in [0, cap]."""
        f = np.asarray(f, dtype=np.float64)
        cap = np.asarray(capacities, dtype=np.float64)
        if np.any(f < -1e-12) or np.any(f > cap + 1e-12):
            raise UncertaintyError("forecast outside [0, capacity]")
        return cls(f=f, box_lo=-f, box_hi=cap - f)

    @property
    def omega_lo(self) -> float:
        return float(self.box_lo.sum())

    @property
    def omega_hi(self) -> float:
        return float(self.box_hi.sum())


# -- trimming weights and budgets ---------------------------------------------


def is_trimming(b: np.ndarray, alpha: float, tol: float = 1e-12) -> bool:
    """Whether b is a valid (1-alpha)-trimming weight vector of its length:
    0 <= b_i <= 1/(N*alpha) and sum(b) = 1."""
    if not (0 < alpha <= 1):
        raise UncertaintyError("alpha must lie in (0, 1]")
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.size == 0:
        raise UncertaintyError("weights must be a nonempty vector")
    cap = 1.0 / (b.size * alpha)
    return bool(np.all(b >= -tol) and np.all(b <= cap + tol)
                and abs(b.sum() - 1.0) <= tol * b.size)


def budget_from_distances(d: np.ndarray, alpha: float) -> float:
    """Minimum transportation budget given per-sample distances to the support.

    Closed form: with n_a = N * alpha and the distances sorted ascending,
    (1/n_a) * sum of the floor(n_a) smallest + (1 - floor(n_a)/n_a) * next one.
    Equals min_b sum_i b_i d_i over the trimming polytope.
    """
    if not (0 < alpha <= 1):
        raise UncertaintyError("alpha must lie in (0, 1]")
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise UncertaintyError("distances must be a nonempty vector")
    if np.any(d < -1e-12):
        raise UncertaintyError("distances must be nonnegative")
    na = d.size * alpha
    order = np.argsort(d, kind="stable")  # ties broken by sample index
    ds = d[order]
    k = int(np.floor(na))
    total = ds[:k].sum() / na
    if k < na and k < d.size:
        total += (1.0 - k / na) * ds[k]
    return float(total)


def l1_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)).sum())


def box_distances(points: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """l1 distance from each row of points to the box [lo, hi]."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    clipped = np.clip(pts, lo, hi)
    return np.abs(pts - clipped).sum(axis=1)


def interval_distances(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return np.maximum(lo - v, 0.0) + np.maximum(v - hi, 0.0)


def context_distances(samples: JointSampleSet, f: np.ndarray,
                      scale: float = 1.0) -> np.ndarray:
    """Scaled l1 distances from the query context to each observed context."""
    return scale * np.abs(samples.z_hat - np.asarray(f, dtype=float)).sum(axis=1)


def min_transport_budget(samples: JointSampleSet, context: Context, alpha: float,
                         context_scale: float = 1.0) -> float:
    """Budget for the chance-constraint ambiguity set, measured in (z, omega)
    space: moving a sample costs its context distance plus its l1 distance
    to the conditional error box."""
    d = context_distances(samples, context.f, context_scale) + \
        box_distances(samples.w_hat, context.box_lo, context.box_hi)
    return budget_from_distances(d, alpha)


def min_transport_budget_aggregate(samples: JointSampleSet, context: Context,
                                   alpha: float, context_scale: float = 1.0) -> float:
    """Budget for the cost ambiguity set, measured in (z, aggregate-error)
    space with the interval support [omega_lo, omega_hi]."""
    d = context_distances(samples, context.f, context_scale) + \
        interval_distances(samples.omega_hat, context.omega_lo, context.omega_hi)
    return budget_from_distances(d, alpha)


def box_support_function(v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """sup_{x in [lo, hi]} <v, x> = sum_m max(v_m lo_m, v_m hi_m)."""
    v = np.asarray(v, dtype=np.float64)
    return float(np.maximum(v * lo, v * hi).sum())


def alpha_schedule(n: int) -> tuple[int, float]:
    """Neighbor count K_N = floor(N^0.9) and trimming level alpha_N = K_N / N."""
    if n < 1:
        raise UncertaintyError("need at least one sample")
    k = int(np.floor(n ** 0.9 + 1e-9))
    return k, k / n


# -- sample file I/O -----------------------------------------------------------


def save_samples(samples: JointSampleSet, path: str | Path) -> None:
    """CSV with per-farm context columns z_<id> then error columns w_<id>."""
    header = [f"z_{fid}" for fid in samples.farm_ids] + \
             [f"w_{fid}" for fid in samples.farm_ids]
    block = np.hstack([samples.z_hat, samples.w_hat])
    np.savetxt(path, block, delimiter=",", header=",".join(header),
               comments="", fmt="%.12g")


def load_samples(path: str | Path) -> JointSampleSet:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    cols = [c.strip() for c in header]
    z_cols = [i for i, c in enumerate(cols) if c.startswith("z_")]
    w_cols = [i for i, c in enumerate(cols) if c.startswith("w_")]
    if not z_cols or len(z_cols) != len(w_cols):
        raise UncertaintyError(f"malformed sample file header: {cols}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    farm_ids = tuple(cols[i][2:] for i in z_cols)
    return JointSampleSet(z_hat=data[:, z_cols], w_hat=data[:, w_cols],
                          farm_ids=farm_ids)


def save_test_set(omega: np.ndarray, farm_ids, path: str | Path) -> None:
    """CSV of error draws only (one scenario per row)."""
    omega = np.atleast_2d(np.asarray(omega, dtype=np.float64))
    header = ",".join(f"w_{fid}" for fid in farm_ids)
    np.savetxt(path, omega, delimiter=",", header=header, comments="", fmt="%.12g")


def load_test_set(path: str | Path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data
