"""Shared constants and builders for the test suite."""
from pathlib import Path

import numpy as np

from pooled_annuity import LifeTable

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
SYNTHETIC_TABLE = DATA_DIR / "synthetic_gompertz_70_110.csv"

# external mortality table for calendar-time checks, supplied by the user
HMD_TABLE_ENV = "POOLED_ANNUITY_HMD_TABLE"
# raises Monte Carlo replications from 1e5 to 1e6 and tightens tolerances
PAPER_FIDELITY_ENV = "PAPER_FIDELITY"


def constant_hazard_table(p: float = 0.5, horizon: int = 30, rate: float = 0.0) -> LifeTable:
    """Flat one-year survival p with certain death in the final year."""
    return LifeTable(
        base_age=70,
        max_age=70 + horizon,
        yearly_survival=np.full(horizon - 1, p),
        interest_rate=rate,
    )
