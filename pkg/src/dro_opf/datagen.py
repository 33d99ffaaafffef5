"""Synthetic wind data: per-unit forecast pool, conditional Beta errors.

Each draw picks a per-unit point forecast from a pool, clips it into
[0.05, 0.95], fits a Beta distribution matching that forecast mean with
standard deviation sigma(f) = 0.2 f + 0.02, and samples the realized
per-unit power from it.  The context is the MW forecast vector and the
error is capacity * (realized - forecast).

Forecasts within one sample are coupled across farms through a Gaussian
rank copula over the pool's empirical quantiles: a shared weather factor
plus per-farm noise drives each farm's pool rank, mirroring zonal
forecasts issued for a common instant.  Every forecast is still literally
a pool value, so the per-farm marginal is exactly the pool distribution.

Streams are keyed per (seed, run, sample) for the shared factor and per
(seed, run, sample, farm) for everything farm specific, so regenerating
any subset yields identical values regardless of generation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .uncertainty import JointSampleSet

FORECAST_CLIP = (0.05, 0.95)
FORECAST_CORR = 0.8


class DataGenError(ValueError):
    """Unusable pool or distribution parameters."""


def sigma_of_forecast(f: float | np.ndarray) -> float | np.ndarray:
    """Error standard deviation (per unit) as a function of the forecast."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0) or np.any(f > 1):
        raise DataGenError("per-unit forecast must lie in [0, 1]")
    out = 0.2 * f + 0.02
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DataGenError(f"Beta parameters must be positive, got {self.a}, {self.b}")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def std(self) -> float:
        s = self.a + self.b
        return float(np.sqrt(self.a * self.b / (s * s * (s + 1.0))))


def fit_beta(mean: float, sigma: float) -> BetaParams:
    """Moment-match a Beta distribution on [0, 1]; requires
    sigma^2 < mean (1 - mean)."""
    if not (0.0 < mean < 1.0):
        raise DataGenError("mean must lie strictly inside (0, 1)")
    if sigma <= 0:
        raise DataGenError("sigma must be positive")
    if sigma * sigma >= mean * (1.0 - mean):
        raise DataGenError("variance too large for a Beta distribution")
    s = mean * (1.0 - mean) / (sigma * sigma) - 1.0
    return BetaParams(a=mean * s, b=(1.0 - mean) * s)


def load_pool(path: str | Path) -> np.ndarray:
    pool = np.loadtxt(path, ndmin=1)
    if pool.size == 0:
        raise DataGenError("empty forecast pool")
    if np.any(pool < 0) or np.any(pool > 1):
        raise DataGenError("pool values must be per-unit in [0, 1]")
    return pool


def default_pool() -> np.ndarray:
    return load_pool(Path(__file__).parent / "cases" / "pool_default.txt")


def _stream(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def generate_joint_samples(pool: np.ndarray, capacities: np.ndarray, n: int,
                           seed: int, run: int = 0,
                           forecast_corr: float = FORECAST_CORR) -> JointSampleSet:
    """Draw N joint (context, error) samples for the given farm capacities.

    forecast_corr is the latent Gaussian correlation between any two farms'
    forecast ranks within one sample; 0 recovers independent forecasts.
    """
    if n < 1:
        raise DataGenError("need n >= 1")
    if not 0.0 <= forecast_corr <= 1.0:
        raise DataGenError("forecast_corr must lie in [0, 1]")
    capacities = np.asarray(capacities, dtype=np.float64)
    w = capacities.size
    ranked_pool = np.sort(pool)
    z = np.empty((n, w))
    err = np.empty((n, w))
    lo, hi = FORECAST_CLIP
    for i in range(n):
        common = _stream(seed, run, i).standard_normal()
        for m in range(w):
            rng = _stream(seed, run, i, m)
            latent = (np.sqrt(forecast_corr) * common
                      + np.sqrt(1.0 - forecast_corr) * rng.standard_normal())
            rank = min(int(ndtr(latent) * ranked_pool.size), ranked_pool.size - 1)
            f_pu = float(np.clip(ranked_pool[rank], lo, hi))
            params = fit_beta(f_pu, float(sigma_of_forecast(f_pu)))
            realized = rng.beta(params.a, params.b)
            z[i, m] = capacities[m] * f_pu
            err[i, m] = capacities[m] * (realized - f_pu)
    return JointSampleSet(z_hat=z, w_hat=err)


def generate_test_set(f_mw: np.ndarray, capacities: np.ndarray, m: int,
                      seed: int) -> np.ndarray:
    """M error scenarios conditional on a fixed MW forecast; vectorized per
    farm, stream key (seed, farm)."""
    if m < 1:
        raise DataGenError("need m >= 1")
    f_mw = np.asarray(f_mw, dtype=np.float64)
    capacities = np.asarray(capacities, dtype=np.float64)
    if f_mw.shape != capacities.shape:
        raise DataGenError("forecast and capacity vectors must align")
    lo, hi = FORECAST_CLIP
    out = np.empty((m, f_mw.size))
    for fm in range(f_mw.size):
        f_pu = float(np.clip(f_mw[fm] / capacities[fm], lo, hi))
        params = fit_beta(f_pu, float(sigma_of_forecast(f_pu)))
        rng = _stream(seed, fm)
        realized = rng.beta(params.a, params.b, size=m)
        # errors are relative to the conditioning forecast itself, so that
        # forecast + error always lands in [0, capacity]
        out[:, fm] = capacities[fm] * realized - f_mw[fm]
    return out
