import os

import pytest

from pooled_annuity import LifeTable

from support import PAPER_FIDELITY_ENV, SYNTHETIC_TABLE, constant_hazard_table


@pytest.fixture
def flat_table() -> LifeTable:
    return constant_hazard_table()


@pytest.fixture(scope="session")
def synthetic_table() -> LifeTable:
    from pooled_annuity import load_life_table

    return load_life_table(SYNTHETIC_TABLE, base_age=70, interest_rate=0.01)


@pytest.fixture(scope="session")
def paper_fidelity() -> bool:
    return os.environ.get(PAPER_FIDELITY_ENV, "") not in ("", "0")


@pytest.fixture(scope="session")
def mc_replications(paper_fidelity) -> int:
    return 1_000_000 if paper_fidelity else 100_000


@pytest.fixture(scope="session")
def u_mc_cache():
    """Session cache of Monte Carlo u* keyed by (pool signature, params)."""
    return {}
