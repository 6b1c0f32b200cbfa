"""Pooled annuity fund stability simulator and savings-pooling advisor."""

from .approximation import (
    ApproxInputs,
    BridgeDiagnostics,
    approx_time,
    approx_u,
    bridge_covariance_check,
    donsker_scale,
    overlay_income_variance,
    reciprocal_survival_variance,
)
from .fund_engine import (
    FundState,
    explicit_income,
    explicit_wealth,
    income,
    init_fund,
    overlay_first_income,
    savings_vector,
    step,
)
from .life_table import LifeTable, LifeTableError, load_life_table
from .pool_metrics import (
    CapAdvice,
    SavingsHashMap,
    best_prefix,
    brute_force_best_subgroup,
    cap_advise,
    cap_extension_is_beneficial,
    implied_number,
    implied_number_hash,
    is_beneficial,
    lambda_threshold,
    merge_benefit_check,
    optimal_extension_amount,
    worst_case_nu_bounds,
    worst_case_nu_exact,
)
from .stability_mc import (
    StabilityEstimate,
    StabilityParams,
    assign_savings_to_deaths,
    estimate_max_stable_time,
    estimate_max_stable_u,
    sample_order_statistics,
    sample_tau,
    stop_time_tau,
)

__version__ = "0.1.0"
