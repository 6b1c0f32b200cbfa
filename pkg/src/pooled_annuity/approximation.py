"""Analytic approximation of the stable horizon and related diagnostics.

The maximal stable transformed time follows a Brownian-motion reflection
argument: the savings distribution enters only through the implied number
of homogeneous members, so the formula covers arbitrary rosters.  The
closed-form first-period variances and the bridge simulation below provide
independent checks on that reduction.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtri

from .fund_engine import savings_vector
from .life_table import LifeTable
from .stability_mc import _batch_rng

__all__ = [
    "ApproxInputs",
    "approx_u",
    "approx_time",
    "donsker_scale",
    "overlay_income_variance",
    "reciprocal_survival_variance",
    "BridgeDiagnostics",
    "bridge_covariance_check",
]


@dataclass(frozen=True)
class ApproxInputs:
    """Inputs to the stable-horizon approximation (lower bound only)."""

    implied_number: float
    eps_lower: float
    beta: float

    def __post_init__(self) -> None:
        if self.implied_number <= 0.0:
            raise ValueError("implied_number must be positive")
        if not 0.0 < self.eps_lower < 1.0:
            raise ValueError("eps_lower must lie in (0, 1)")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")


def approx_u(inputs: ApproxInputs) -> float:
    """Approximate maximal stable transformed time in (0, 1).

    Returns exactly 0.0 (with a warning) in the beta = 1 limit, where the
    normal quantile diverges.
    """
    if inputs.beta == 1.0:
        warnings.warn("beta = 1 has no stable horizon; returning the u = 0 limit", RuntimeWarning)
        return 0.0
    quantile = ndtri((1.0 - inputs.beta) / 2.0)
    band = (1.0 - inputs.eps_lower) / inputs.eps_lower
    return 1.0 / (1.0 + band * band * quantile * quantile / inputs.implied_number)


def approx_time(inputs: ApproxInputs, lt: LifeTable) -> float:
    """Approximate stable horizon in calendar years."""
    return lt.f_inverse(approx_u(inputs))


def donsker_scale(savings: Iterable[float]) -> float:
    """Scale of the limiting Gaussian fluctuations; the reciprocal square
    root of the implied number of homogeneous members."""
    s = savings_vector(savings)
    return float(math.sqrt(np.sum(s * s)) / np.sum(s))


def overlay_income_variance(savings: Iterable[float], lt: LifeTable, member: int) -> float:
    """Variance of a member's first income payment in the overlay fund."""
    s = savings_vector(savings)
    p1 = float(lt.survival(1))
    growth = 1.0 + lt.interest_rate
    c0 = s[member] / lt.overlay_annuity_price(0)
    base = (s[member] - c0) * growth / lt.overlay_annuity_price(1)
    concentration = float(np.sum(s * s) / np.sum(s) ** 2)
    return p1 * (1.0 - p1) * base * base * concentration


def reciprocal_survival_variance(savings: Iterable[float], lt: LifeTable) -> float:
    """Variance of experienced over ideal one-year survival."""
    s = savings_vector(savings)
    p1 = float(lt.survival(1))
    if p1 == 0.0:
        raise ValueError("one-year survival is zero; reciprocal variance undefined")
    concentration = float(np.sum(s * s) / np.sum(s) ** 2)
    return (1.0 - p1) / p1 * concentration


@dataclass(frozen=True)
class BridgeDiagnostics:
    max_mean_deviation: float
    max_covariance_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.max_mean_deviation, self.max_covariance_deviation)


def bridge_covariance_check(
    savings: Iterable[float],
    n_paths: int,
    grid: Sequence[float],
    seed: int = 0,
) -> BridgeDiagnostics:
    """Simulate the scaled death-count fluctuation process on a grid and
    measure how far its moments sit from a standard Brownian bridge.

    Diagnostic only; convergence is in the pool size, not the path count.
    """
    s = savings_vector(savings)
    g = np.asarray(grid, dtype=float)
    if g.size == 0 or np.any(g <= 0.0) or np.any(g >= 1.0):
        raise ValueError("grid points must lie strictly inside (0, 1)")
    scale = 1.0 / math.sqrt(float(np.sum(s * s)))

    values = np.empty((n_paths, g.size))
    done = 0
    batch = 0
    chunk = max(1, (1 << 21) // s.size)
    while done < n_paths:
        take = min(chunk, n_paths - done)
        rng = _batch_rng(seed, batch)
        u = rng.random((take, s.size))
        for j, gj in enumerate(g):
            dead = u <= gj
            values[done : done + take, j] = scale * (gj * np.sum(s) - dead @ s)
        done += take
        batch += 1

    mean_dev = float(np.max(np.abs(values.mean(axis=0))))
    centered = values - values.mean(axis=0)
    cov = centered.T @ centered / n_paths
    target = np.minimum.outer(g, g) * (1.0 - np.maximum.outer(g, g))
    cov_dev = float(np.max(np.abs(cov - target)))
    return BridgeDiagnostics(max_mean_deviation=mean_dev, max_covariance_deviation=cov_dev)
