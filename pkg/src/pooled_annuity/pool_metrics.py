"""The implied number of homogeneous members and who should pool with whom.

The implied number (sum of savings squared over sum of squares) is the size
of an equal-savings pool with the same income stability.  A roster is
"beneficial" when no subgroup could secede and do better; all candidate
subgroups are cumulative prefixes of the savings sorted ascending, so the
search is linear in the number of distinct amounts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .approximation import ApproxInputs, approx_time
from .fund_engine import savings_vector
from .life_table import LifeTable
from .stability_mc import StabilityParams

__all__ = [
    "SavingsHashMap",
    "implied_number",
    "implied_number_hash",
    "optimal_extension_amount",
    "merge_benefit_check",
    "lambda_threshold",
    "worst_case_nu_bounds",
    "worst_case_nu_exact",
    "best_prefix",
    "brute_force_best_subgroup",
    "is_beneficial",
    "cap_extension_is_beneficial",
    "CapAdvice",
    "cap_advise",
]

# relative tolerance treating two implied numbers as tied
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SavingsHashMap:
    """Compressed roster: strictly increasing distinct amounts with counts.

    Counts (and the optional per-group weights) may be non-integer; the
    expansion to a flat savings vector exists only for integer counts with
    unit weights.
    """

    amounts: np.ndarray
    counts: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        z = np.asarray(self.amounts, dtype=float)
        n = np.asarray(self.counts, dtype=float)
        w = np.ones_like(z) if self.weights is None else np.asarray(self.weights, dtype=float)
        if z.ndim != 1 or z.size < 1 or z.shape != n.shape or z.shape != w.shape:
            raise ValueError("amounts, counts, and weights must be equal-length 1-D arrays")
        if not np.all(np.diff(z) > 0.0):
            raise ValueError("amounts must be strictly increasing")
        if not (np.all(z > 0.0) and np.all(n > 0.0) and np.all(w > 0.0)):
            raise ValueError("amounts, counts, and weights must be strictly positive")
        object.__setattr__(self, "amounts", z)
        object.__setattr__(self, "counts", n)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_savings(cls, savings: Iterable[float]) -> "SavingsHashMap":
        """Group a flat savings vector by exact (bitwise) equality."""
        s = savings_vector(savings)
        amounts, counts = np.unique(s, return_counts=True)
        return cls(amounts=amounts, counts=counts.astype(float))

    def to_savings(self) -> np.ndarray:
        """Expand to a flat vector; requires integer counts and unit weights."""
        if not np.allclose(self.counts, np.round(self.counts)):
            raise ValueError("expansion requires integer counts")
        if not np.all(self.weights == 1.0):
            raise ValueError("expansion requires unit weights")
        return np.repeat(self.amounts, self.counts.astype(int))


def implied_number(savings: Iterable[float]) -> float:
    """Size of the equal-savings pool with the same income stability."""
    s = savings_vector(savings)
    return float(np.sum(s) ** 2 / np.sum(s * s))


def implied_number_hash(h: SavingsHashMap) -> float:
    mass = h.counts * h.weights
    total = np.sum(h.amounts * mass)
    return float(total * total / np.sum(h.amounts**2 * mass))


def optimal_extension_amount(savings: Iterable[float]) -> float:
    """Amount a new member must contribute to raise the implied number by
    exactly one, the largest increase possible."""
    s = savings_vector(savings)
    return float(np.sum(s * s) / np.sum(s))


def merge_benefit_check(
    poor: Iterable[float], rich: Iterable[float]
) -> tuple[float, float]:
    """Implied numbers of the rich pool alone and of the merged pool; the
    merged value is never below the rich one."""
    p = savings_vector(poor)
    r = savings_vector(rich)
    if p.max() > r.min():
        raise ValueError("every poor amount must be at most every rich amount")
    return implied_number(r), implied_number(np.concatenate([p, r]))


def lambda_threshold(poor: Iterable[float], rich: Iterable[float]) -> Optional[float]:
    """Replication count past which the poor do better on their own.

    For every integer ``lam`` above the returned threshold, ``lam`` copies
    of the poor pool have a higher implied number alone than together with
    the rich pool.  Returns None when the hypothesis (rich concentration
    exceeding twice the poor one) fails and no threshold is guaranteed.
    """
    s = savings_vector(poor)
    t = savings_vector(rich)
    sum_s, sum_s2 = float(np.sum(s)), float(np.sum(s * s))
    sum_t, sum_t2 = float(np.sum(t)), float(np.sum(t * t))
    if not 2.0 * sum_s2 / sum_s < sum_t2 / sum_t:
        return None
    bound = (sum_s / sum_t) * (sum_s / sum_s2) * (sum_t2 / sum_t - 2.0 * sum_s2 / sum_s)
    return 1.0 / bound


def worst_case_nu_bounds(n: int, m: float, big_m: float) -> tuple[float, float]:
    """Bounds on the smallest implied number over n members with savings
    confined to [m, M]."""
    if not (big_m > m > 0.0) or n < 1:
        raise ValueError("require M > m > 0 and n >= 1")
    lower = n * 4.0 * m * big_m / (m + big_m) ** 2
    upper = lower * (1.0 + big_m**3 / (4.0 * m**3 * n**2))
    return lower, upper


def worst_case_nu_exact(n: int, m: float, big_m: float) -> float:
    """Smallest implied number over n members with savings in {m, M};
    two-point rosters attain the infimum over the whole box."""
    if not (big_m > m > 0.0) or n < 1:
        raise ValueError("require M > m > 0 and n >= 1")
    x = np.arange(n + 1) / n
    values = n * (big_m * x + m * (1.0 - x)) ** 2 / (big_m**2 * x + m**2 * (1.0 - x))
    return float(np.min(values))


def best_prefix(h: SavingsHashMap) -> tuple[int, float, np.ndarray]:
    """Argmax of the implied number over cumulative prefixes.

    Returns ``(i_star, nu_max, per_prefix_nu)``; ``i_star`` counts how many
    distinct amounts the best prefix keeps (1-based).  Prefix ties within
    relative tolerance resolve to the larger prefix.
    """
    mass = h.counts * h.weights
    first = np.cumsum(h.amounts * mass)
    second = np.cumsum(h.amounts**2 * mass)
    nu = first * first / second
    nu_max = float(np.max(nu))
    tied = nu >= nu_max * (1.0 - TIE_RTOL)
    i_star = int(np.nonzero(tied)[0][-1]) + 1
    return i_star, float(nu[i_star - 1]), nu


def brute_force_best_subgroup(
    h: SavingsHashMap, limit: int = 10**6
) -> tuple[tuple[int, ...], float]:
    """Exhaustive subgroup search (test oracle); integer counts only."""
    if not np.allclose(h.counts, np.round(h.counts)):
        raise ValueError("brute force requires integer counts")
    counts = h.counts.astype(int)
    space = int(np.prod(counts + 1))
    if space > limit:
        raise ValueError(f"search space {space} exceeds limit {limit}")
    grids = np.meshgrid(*(np.arange(c + 1) for c in counts), indexing="ij")
    picks = np.stack([g.ravel() for g in grids], axis=1).astype(float)
    mass = picks * h.weights
    first = mass @ h.amounts
    second = mass @ (h.amounts**2)
    with np.errstate(invalid="ignore", divide="ignore"):
        nu = np.where(second > 0.0, first * first / second, 0.0)
    best = int(np.argmax(nu))
    return tuple(int(v) for v in picks[best]), float(nu[best])


def is_beneficial(h: SavingsHashMap) -> bool:
    """True when the whole roster attains the maximal implied number."""
    i_star, _, nu = best_prefix(h)
    return bool(i_star == h.amounts.size or nu[-1] >= np.max(nu) * (1.0 - TIE_RTOL))


def cap_extension_is_beneficial(savings: Iterable[float], extra_members: int) -> bool:
    """Whether a beneficial roster stays beneficial after ``extra_members``
    join, each contributing exactly the current maximum amount."""
    s = savings_vector(savings)
    if extra_members < 1:
        raise ValueError("extra_members must be at least 1")
    if not is_beneficial(SavingsHashMap.from_savings(s)):
        raise ValueError("savings roster is not beneficial")
    extended = np.concatenate([s, np.full(extra_members, s.max())])
    return is_beneficial(SavingsHashMap.from_savings(extended))


@dataclass(frozen=True)
class CapAdvice:
    """Per-prefix analysis and recommended savings-cap range."""

    amounts: np.ndarray
    cumulative_counts: np.ndarray
    cumulative_nu: np.ndarray
    nu_max: float
    nu_full: float
    window: tuple[int, int]  # inclusive 1-based prefix range within slack of the max
    cap_range: tuple[float, float]
    beneficial: bool
    capped_years: Optional[tuple[float, float]] = None
    uncapped_years: Optional[float] = None


def cap_advise(
    savings: Iterable[float],
    lt: Optional[LifeTable],
    params: StabilityParams,
    slack: float = 0.03,
) -> CapAdvice:
    """Recommend a maximal savings level for joining the pool.

    Prefixes whose implied number sits within ``slack`` (relative) of the
    best prefix form the recommended cap window.  With a life table, the
    stable horizons of the capped window and the uncapped roster are added
    for comparison.
    """
    h = SavingsHashMap.from_savings(savings)
    i_star, nu_max, nu = best_prefix(h)
    within = np.nonzero(nu >= nu_max * (1.0 - slack))[0]
    lo, hi = int(within[0]) + 1, int(within[-1]) + 1
    cumulative_counts = np.cumsum(h.counts)

    capped_years = None
    uncapped_years = None
    if lt is not None:
        years = [
            approx_time(ApproxInputs(float(nu[i - 1]), params.eps_lower, params.beta), lt)
            for i in (lo, hi)
        ]
        capped_years = (min(years), max(years))
        uncapped_years = approx_time(
            ApproxInputs(float(nu[-1]), params.eps_lower, params.beta), lt
        )

    return CapAdvice(
        amounts=h.amounts,
        cumulative_counts=cumulative_counts,
        cumulative_nu=nu,
        nu_max=nu_max,
        nu_full=float(nu[-1]),
        window=(lo, hi),
        cap_range=(float(h.amounts[lo - 1]), float(h.amounts[hi - 1])),
        beneficial=is_beneficial(h),
        capped_years=capped_years,
        uncapped_years=uncapped_years,
    )
