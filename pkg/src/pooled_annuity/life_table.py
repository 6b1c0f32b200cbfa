"""Life table with a continuous survival curve and annuity prices.

A table is loaded from a CSV with ``age`` plus ``qx`` and/or ``lx`` columns.
The first row with ``qx == 1`` (or ``lx == 0`` at the next age) closes the
table: everyone alive at that age dies within the year, so the limiting age
sits one year later and the survival curve reaches exactly zero there.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["LifeTable", "LifeTableError", "load_life_table"]


class LifeTableError(ValueError):
    """Raised for malformed mortality tables or out-of-range ages."""


@dataclass(frozen=True)
class LifeTable:
    """Immutable survival model anchored at ``base_age``.

    ``yearly_survival[k]`` is the one-year survival probability at age
    ``base_age + k`` and is strictly inside (0, 1).  The year before the
    limiting age ``max_age`` is certain death and is not stored.  Between
    integer ages the survival curve uses a constant force of mortality,
    except in the final year where the force is infinite and a linear
    bridge down to zero keeps the curve continuous and strictly decreasing.
    """

    base_age: int
    max_age: int
    yearly_survival: np.ndarray
    interest_rate: float
    # cumulative[k] = survival to exact duration k, k = 0 .. max_age - base_age
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.yearly_survival, dtype=float)
        horizon = self.max_age - self.base_age
        if horizon < 1:
            raise LifeTableError("base_age must lie strictly below the limiting age")
        if p.shape != (horizon - 1,):
            raise LifeTableError(
                f"expected {horizon - 1} yearly survival probabilities, got {p.size}"
            )
        if p.size and (p.min() <= 0.0 or p.max() >= 1.0):
            raise LifeTableError("yearly survival probabilities must lie strictly in (0, 1)")
        if self.interest_rate < 0.0:
            raise LifeTableError("interest rate must be non-negative")
        object.__setattr__(self, "yearly_survival", p)
        cumulative = np.concatenate(([1.0], np.cumprod(p), [0.0]))
        object.__setattr__(self, "_cumulative", cumulative)

    @property
    def horizon(self) -> int:
        """Years from base age to the limiting age (survival hits 0 there)."""
        return self.max_age - self.base_age

    def survival(self, t: float) -> float:
        """Probability of surviving ``t`` more years from the base age."""
        if t < 0.0:
            raise ValueError("t must be non-negative")
        if t >= self.horizon:
            return 0.0
        k = int(math.floor(t))
        frac = t - k
        sk = self._cumulative[k]
        if frac == 0.0:
            return float(sk)
        if k == self.horizon - 1:
            # final year: linear bridge to exactly zero
            return float(sk * (1.0 - frac))
        return float(sk * self.yearly_survival[k] ** frac)

    def f_inverse(self, u: float) -> float:
        """Years ``t`` with ``1 - survival(t) == u``; inverse of the CDF."""
        if not 0.0 <= u <= 1.0:
            raise ValueError("u must lie in [0, 1]")
        if u == 0.0:
            return 0.0
        if u == 1.0:
            return float(self.horizon)
        s = 1.0 - u
        # largest k with cumulative[k] >= s; cumulative is strictly decreasing
        k = int(np.searchsorted(-self._cumulative, -s, side="right")) - 1
        sk = self._cumulative[k]
        if sk == s:
            return float(k)
        if k == self.horizon - 1:
            return float(k + 1.0 - s / sk)
        return float(k + math.log(s / sk) / math.log(self.yearly_survival[k]))

    def _check_integer_age(self, t: int) -> None:
        if not 0 <= t < self.horizon:
            raise LifeTableError(
                f"age {self.base_age + t} is at or beyond the limiting age {self.max_age}"
            )

    def annuity_price(self, t: int) -> float:
        """Fair annuity-due price at age ``base_age + t`` (>= 1)."""
        self._check_integer_age(t)
        p = self.yearly_survival[t:]
        if p.size == 0:
            return 1.0
        v = 1.0 / (1.0 + self.interest_rate)
        discounts = v ** np.arange(1, p.size + 1)
        return float(1.0 + np.sum(discounts * np.cumprod(p)))

    def overlay_annuity_price(self, t: int) -> float:
        """Annuity price for the overlay variant; never below annuity_price."""
        self._check_integer_age(t)
        p = self.yearly_survival[t:]
        if p.size == 0:
            return 1.0
        v = 1.0 / (1.0 + self.interest_rate)
        discounts = v ** np.arange(1, p.size + 1)
        return float(1.0 + np.sum(discounts * np.cumprod(1.0 / (2.0 - p))))


def _read_columns(source: str | Path) -> tuple[list[int], dict[str, list[float]]]:
    path = Path(source)
    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "age" not in reader.fieldnames:
            raise LifeTableError(f"{path}: missing header with an 'age' column")
        names = [n for n in ("qx", "lx") if n in reader.fieldnames]
        if not names:
            raise LifeTableError(f"{path}: need a 'qx' or 'lx' column")
        ages: list[int] = []
        columns: dict[str, list[float]] = {n: [] for n in names}
        for row in reader:
            ages.append(int(row["age"]))
            for n in names:
                columns[n].append(float(row[n]))
    if not ages:
        raise LifeTableError(f"{path}: empty table")
    return ages, columns


def load_life_table(source: str | Path, base_age: int, interest_rate: float) -> LifeTable:
    """Build a :class:`LifeTable` from a CSV mortality table.

    Accepts ``qx`` (one-year death probability) or ``lx`` (survivors);
    ``lx`` takes precedence when both are present.
    """
    ages, columns = _read_columns(source)
    if any(b - a != 1 for a, b in zip(ages, ages[1:])):
        raise LifeTableError("ages must be contiguous")
    if "lx" in columns:
        lx = columns["lx"]
        if any(v < 0 for v in lx):
            raise LifeTableError("lx values must be non-negative")
        qx = []
        for a, b in zip(lx, lx[1:]):
            if a == 0.0:
                qx.append(1.0)
            else:
                q = 1.0 - b / a
                qx.append(q)
        # the final listed age has no successor; treat it as the closing row
        qx.append(1.0)
    else:
        qx = columns["qx"]
    if any(not 0.0 <= q <= 1.0 for q in qx):
        raise LifeTableError("death probabilities must lie in [0, 1]")

    if base_age < ages[0] or base_age > ages[-1]:
        raise LifeTableError(f"base_age {base_age} outside table range {ages[0]}..{ages[-1]}")
    start = base_age - ages[0]

    closing = None
    for k in range(start, len(qx)):
        if qx[k] >= 1.0:
            closing = ages[k]
            break
    if closing is None:
        raise LifeTableError("table has no closing row (qx = 1 or lx = 0); limiting age undefined")
    if closing == base_age:
        raise LifeTableError(f"base_age {base_age} is at or beyond the limiting age")

    yearly = [1.0 - q for q in qx[start : closing - ages[0]]]
    if any(p <= 0.0 or p >= 1.0 for p in yearly):
        raise LifeTableError("interior one-year survival probabilities must lie strictly in (0, 1)")
    return LifeTable(
        base_age=base_age,
        max_age=closing + 1,
        yearly_survival=np.asarray(yearly),
        interest_rate=float(interest_rate),
    )
