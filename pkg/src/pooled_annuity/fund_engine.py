"""Account mechanics of the pooled annuity fund.

Deaths are exogenous inputs (index sets per period), so everything here is
deterministic and replayable; lifetime sampling lives in ``stability_mc``.
``step`` iterates the wealth recursion while ``explicit_wealth`` /
``explicit_income`` give the closed forms used as oracles against it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .life_table import LifeTable

__all__ = [
    "FundState",
    "savings_vector",
    "init_fund",
    "income",
    "step",
    "explicit_wealth",
    "explicit_income",
    "overlay_first_income",
]


def savings_vector(amounts: Iterable[float]) -> np.ndarray:
    """Validate and return initial savings as a float array (all > 0)."""
    s = np.asarray(list(amounts) if not isinstance(amounts, np.ndarray) else amounts, dtype=float)
    if s.ndim != 1 or s.size < 1:
        raise ValueError("savings must be a non-empty 1-D sequence")
    if not np.all(s > 0.0):
        raise ValueError("all savings amounts must be strictly positive")
    return s


@dataclass(frozen=True)
class FundState:
    """Per-member wealth and alive flags at an integer time.

    ``unallocated`` accumulates funds left when the last members die in a
    period (they go to heirs, not back into the pool).
    """

    time: int
    wealth: np.ndarray
    alive: np.ndarray
    savings: np.ndarray
    life_table: LifeTable
    unallocated: float = 0.0


def init_fund(savings: Iterable[float], lt: LifeTable) -> FundState:
    s = savings_vector(savings)
    return FundState(
        time=0,
        wealth=s.copy(),
        alive=np.ones(s.size, dtype=bool),
        savings=s,
        life_table=lt,
    )


def income(state: FundState) -> np.ndarray:
    """Income payments at the state's time: wealth over the annuity price."""
    price = state.life_table.annuity_price(state.time)
    return np.where(state.alive, state.wealth / price, 0.0)


def step(state: FundState, newly_dead: Iterable[int]) -> FundState:
    """Advance one period: withdraw income, grow, pool and redistribute.

    ``newly_dead`` are the members dying in ``(t, t+1]``.  Longevity credits
    go to survivors in proportion to their savings, which equals the
    wealth-proportional rule because wealth ratios stay at savings ratios.
    """
    dead_idx = np.asarray(sorted(set(newly_dead)), dtype=int)
    if dead_idx.size and not np.all(state.alive[dead_idx]):
        raise ValueError("newly_dead contains an already-dead member")

    growth = 1.0 + state.life_table.interest_rate
    grown = np.where(state.alive, (state.wealth - income(state)) * growth, 0.0)

    alive_next = state.alive.copy()
    alive_next[dead_idx] = False

    wealth_next = np.zeros_like(grown)
    unallocated = state.unallocated
    if np.any(alive_next):
        pooled_savings = float(np.sum(state.savings[dead_idx]))
        surviving_savings = float(np.sum(state.savings[alive_next]))
        credit_factor = pooled_savings / surviving_savings
        wealth_next[alive_next] = grown[alive_next] * (1.0 + credit_factor)
    else:
        unallocated += float(np.sum(grown[dead_idx]))

    return FundState(
        time=state.time + 1,
        wealth=wealth_next,
        alive=alive_next,
        savings=state.savings,
        life_table=state.life_table,
        unallocated=unallocated,
    )


def _survival_ratio(savings: np.ndarray, lt: LifeTable, t: int, alive: np.ndarray) -> float:
    """Ideal over experienced (savings-weighted) survival at integer t."""
    p_hat = float(np.sum(savings[alive]) / np.sum(savings))
    if p_hat == 0.0:
        warnings.warn("all members dead: experienced survival is zero", RuntimeWarning)
        return 0.0
    return lt.survival(t) / p_hat


def explicit_wealth(
    savings: Iterable[float], lt: LifeTable, t: int, alive_flags: Iterable[bool]
) -> np.ndarray:
    """Closed-form wealth at integer time t given who is still alive."""
    s = savings_vector(savings)
    alive = np.asarray(alive_flags, dtype=bool)
    ratio = _survival_ratio(s, lt, t, alive)
    if ratio == 0.0:
        return np.zeros_like(s)
    return np.where(alive, s * (lt.annuity_price(t) / lt.annuity_price(0)) * ratio, 0.0)


def explicit_income(
    savings: Iterable[float], lt: LifeTable, t: int, alive_flags: Iterable[bool]
) -> np.ndarray:
    """Closed-form income at integer time t; initial income times a common factor."""
    s = savings_vector(savings)
    alive = np.asarray(alive_flags, dtype=bool)
    ratio = _survival_ratio(s, lt, t, alive)
    if ratio == 0.0:
        return np.zeros_like(s)
    return np.where(alive, (s / lt.annuity_price(0)) * ratio, 0.0)


def overlay_first_income(
    savings: Iterable[float], lt: LifeTable, deaths_in_first_period: Iterable[int]
) -> np.ndarray:
    """First income payment in the overlay variant, where the recently
    deceased share in the credits and prices come from the overlay annuity."""
    s = savings_vector(savings)
    dead = np.asarray(sorted(set(deaths_in_first_period)), dtype=int)
    growth = 1.0 + lt.interest_rate
    c0 = s / lt.overlay_annuity_price(0)
    factor = 1.0 + float(np.sum(s[dead]) / np.sum(s))
    return (s - c0) * growth / lt.overlay_annuity_price(1) * factor
