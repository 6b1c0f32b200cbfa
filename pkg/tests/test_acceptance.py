"""Acceptance gate: one test per headline criterion, one printed verdict each.

Monte Carlo tiers: the default run uses 1e5 replications with tolerance
0.008 in transformed time; setting PAPER_FIDELITY=1 raises replications to
1e6 and tightens the tolerance to 0.005.

Calendar-time criteria need an external mortality table (UK 2020 period,
both sexes, from age 70).  Point POOLED_ANNUITY_HMD_TABLE at a CSV with
age and qx/lx columns to enable them; without it they degrade to the
distribution-free checks noted inline.
"""
import math
import os

import numpy as np
import pytest

from pooled_annuity import (
    ApproxInputs,
    SavingsHashMap,
    StabilityParams,
    approx_u,
    best_prefix,
    bridge_covariance_check,
    brute_force_best_subgroup,
    cap_extension_is_beneficial,
    estimate_max_stable_time,
    estimate_max_stable_u,
    explicit_income,
    explicit_wealth,
    implied_number,
    implied_number_hash,
    income,
    init_fund,
    is_beneficial,
    load_life_table,
    merge_benefit_check,
    optimal_extension_amount,
    overlay_first_income,
    step,
    worst_case_nu_bounds,
    worst_case_nu_exact,
)

from support import HMD_TABLE_ENV, constant_hazard_table

ONE_SIDED = StabilityParams(eps_lower=0.1, eps_upper=math.inf, beta=0.9)
TWO_SIDED = StabilityParams(eps_lower=0.1, eps_upper=0.1, beta=0.9)

TABLE1_PRINTED = {
    "poor": 21.70,
    "rich": 15.41,
    "mixed": {1.0: 22.57, 0.7: 22.48, 0.5: 22.15, 0.3: 21.24, 0.2: 20.12, 0.1: 18.48},
}


def verdict(capfd, name, passed, detail=""):
    line = f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    with capfd.disabled():
        print(line, flush=True)
    assert passed, line


def two_group(n_poor, total, ratio):
    return np.concatenate([np.full(n_poor, ratio), np.full(total - n_poor, 1.0)])


def pool_key(savings):
    amounts, counts = np.unique(savings, return_counts=True)
    return tuple(zip(amounts.tolist(), counts.tolist()))


def mc_u(cache, savings, params, reps, seed=0):
    key = (pool_key(savings), params, reps, seed)
    if key not in cache:
        cache[key] = estimate_max_stable_u(savings, params, reps, seed).u_star
    return cache[key]


@pytest.fixture(scope="session")
def hmd_table():
    path = os.environ.get(HMD_TABLE_ENV)
    if not path:
        return None
    return load_life_table(path, base_age=70, interest_rate=0.01)


def test_mc_matches_approximation_distribution_free(capfd, u_mc_cache, mc_replications, paper_fidelity):
    tol = 0.005 if paper_fidelity else 0.008
    pools = [np.ones(n) for n in (200, 800, 1000)]
    pools += [two_group(800, 1000, r) for r in (0.1, 0.3, 0.5, 1.0)]
    worst = 0.0
    for pool in pools:
        u_sim = mc_u(u_mc_cache, pool, ONE_SIDED, mc_replications)
        u_eq = approx_u(ApproxInputs(implied_number(pool), 0.1, 0.9))
        worst = max(worst, abs(u_sim - u_eq))
    verdict(
        capfd,
        "mc-vs-approximation",
        worst <= tol,
        f"max |u_MC - u_approx| = {worst:.4f}, tol {tol} at R = {mc_replications}",
    )


def test_table1_reproduction(capfd, u_mc_cache, mc_replications, hmd_table):
    ratios = (1.0, 0.7, 0.5, 0.3, 0.2, 0.1)
    if hmd_table is not None:
        worst = 0.0
        for ratio in ratios:
            cells = {
                "poor": (np.full(800, ratio), TABLE1_PRINTED["poor"]),
                "rich": (np.full(200, 1.0), TABLE1_PRINTED["rich"]),
                "mixed": (two_group(800, 1000, ratio), TABLE1_PRINTED["mixed"][ratio]),
            }
            for pool, printed in cells.values():
                u_sim = mc_u(u_mc_cache, pool, ONE_SIDED, mc_replications)
                worst = max(worst, abs(hmd_table.f_inverse(u_sim) - printed))
        verdict(capfd, "table1", worst <= 0.15, f"max cell error {worst:.3f} years")
        return
    # degraded tier: no external table available, so check the mixed row
    # decreases in the savings ratio in transformed time (the published
    # pattern) on top of the distribution-free comparison above
    u_mixed = [
        mc_u(u_mc_cache, two_group(800, 1000, r), ONE_SIDED, mc_replications)
        for r in ratios
    ]
    ordered = all(a > b for a, b in zip(u_mixed, u_mixed[1:]))
    verdict(
        capfd,
        "table1",
        ordered,
        "degraded: no external mortality table; mixed-row ordering "
        + " > ".join(f"{u:.4f}" for u in u_mixed),
    )


def test_figure1_marker(capfd, u_mc_cache, mc_replications, hmd_table):
    pool = np.concatenate([np.full(900, 1.0), np.full(100, 10.0)])
    if hmd_table is not None:
        est = estimate_max_stable_time(pool, TWO_SIDED, hmd_table, mc_replications, seed=0)
        verdict(
            capfd,
            "figure1-marker",
            abs(est.t_star - 15.06) <= 0.15,
            f"marker {est.t_star:.2f} years vs 15.06",
        )
        return
    # degraded tier: check the marker machinery in transformed time: the
    # two-sided stop time must sit strictly inside the one-sided one and
    # map consistently through any table's inverse CDF
    u_two = mc_u(u_mc_cache, pool, TWO_SIDED, mc_replications)
    u_one = mc_u(u_mc_cache, pool, ONE_SIDED, mc_replications)
    lt = constant_hazard_table(p=0.9, horizon=40)
    est = estimate_max_stable_time(pool, TWO_SIDED, lt, 20_000, seed=0)
    consistent = est.t_star == pytest.approx(lt.f_inverse(est.u_star), abs=1e-12)
    verdict(
        capfd,
        "figure1-marker",
        0.0 < u_two < u_one and consistent,
        f"degraded: no external mortality table; u_two_sided = {u_two:.4f} < "
        f"u_one_sided = {u_one:.4f}",
    )


def test_exact_implied_numbers(capfd):
    checks = [
        abs(implied_number([100.0] * 500 + [200.0] * 500) - 900.0) < 1e-9,
        abs(worst_case_nu_bounds(1100, 1.0, 10.0)[0] - 1100 * 40 / 121) < 1e-9,
        abs(worst_case_nu_exact(1100, 1.0, 10.0) - 1100 * 40 / 121) < 1e-9,
    ]
    verdict(capfd, "exact-implied-numbers", all(checks))


def test_prefix_optimality_oracle(capfd):
    rng = np.random.default_rng(2024)
    failures = 0
    for _ in range(1000):
        groups = int(rng.integers(1, 7))
        amounts = np.unique(np.exp(rng.uniform(0.0, np.log(100.0), groups)))
        counts = rng.integers(1, 5, amounts.size).astype(float)
        h = SavingsHashMap(amounts=amounts, counts=counts)
        picks, nu_best = brute_force_best_subgroup(h)
        i_star, nu_max, _ = best_prefix(h)
        prefix = tuple(int(c) if i < i_star else 0 for i, c in enumerate(h.counts))
        if picks != prefix or abs(nu_best - nu_max) > 1e-12 * nu_max:
            failures += 1
    verdict(capfd, "prefix-optimality", failures == 0, f"{failures} failures / 1000 maps")


def test_structural_laws(capfd):
    rng = np.random.default_rng(7)
    ok = True

    # bound by member count, equality iff homogeneous
    for _ in range(200):
        s = rng.uniform(0.5, 30.0, int(rng.integers(2, 40)))
        nu = implied_number(s)
        ok &= 1.0 <= nu <= s.size + 1e-12
    ok &= abs(implied_number(np.full(33, 2.0)) - 33.0) < 1e-12 * 33

    # extension by the optimal amount adds exactly one
    for _ in range(50):
        s = rng.uniform(0.5, 30.0, int(rng.integers(2, 20)))
        x = optimal_extension_amount(s)
        ok &= abs(implied_number(np.concatenate([s, [x]])) - implied_number(s) - 1.0) < 1e-10

    # scale invariance
    for _ in range(50):
        s = rng.uniform(0.5, 30.0, 20)
        ok &= abs(implied_number(3.7 * s) - implied_number(s)) < 1e-10

    # merging a poorer group never hurts the rich group
    for _ in range(10_000):
        split = float(rng.uniform(1.0, 10.0))
        poor = rng.uniform(0.1, split, int(rng.integers(1, 10)))
        rich = rng.uniform(split, 50.0, int(rng.integers(1, 10)))
        rich_alone, merged = merge_benefit_check(poor, rich)
        ok &= merged >= rich_alone - 1e-12

    # worst-case sandwich
    for _ in range(1000):
        n = int(rng.integers(1, 300))
        m = float(rng.uniform(0.1, 5.0))
        big_m = m * float(rng.uniform(1.01, 15.0))
        lower, upper = worst_case_nu_bounds(n, m, big_m)
        exact = worst_case_nu_exact(n, m, big_m)
        ok &= lower - 1e-9 <= exact <= upper + 1e-9

    # max/min ratio at most two implies the whole roster is optimal
    for _ in range(200):
        lo = float(rng.uniform(0.5, 10.0))
        s = rng.uniform(lo, 2.0 * lo, int(rng.integers(2, 25)))
        ok &= is_beneficial(SavingsHashMap.from_savings(s))

    # count scaling
    h = SavingsHashMap(amounts=np.array([1.0, 4.0, 9.0]), counts=np.array([3.0, 2.0, 1.0]))
    for lam in (2.0, 7.0):
        scaled = SavingsHashMap(amounts=h.amounts, counts=lam * h.counts)
        ok &= abs(implied_number_hash(scaled) - lam * implied_number_hash(h)) < 1e-10

    # beneficial rosters stay beneficial under top-amount extension
    for seed in range(1000):
        r = np.random.default_rng(seed)
        lo = float(r.uniform(0.5, 5.0))
        s = r.uniform(lo, 2.0 * lo, int(r.integers(2, 12)))
        ok &= cap_extension_is_beneficial(s, int(r.integers(1, 40)))

    verdict(capfd, "structural-laws", bool(ok))


def test_recursion_matches_closed_form(capfd):
    lt = constant_hazard_table(p=0.85, horizon=30, rate=0.01)
    worst_rel = 0.0
    worst_ratio = 0.0
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 51))
        savings = rng.uniform(0.5, 20.0, n)
        deaths = rng.integers(0, lt.horizon + 1, n)
        state = init_fund(savings, lt)
        for t in range(lt.horizon - 1):
            if not state.alive.any():
                break
            w = explicit_wealth(savings, lt, t, state.alive)
            c = explicit_income(savings, lt, t, state.alive)
            scale_w = max(np.max(np.abs(w)), 1e-30)
            scale_c = max(np.max(np.abs(c)), 1e-30)
            worst_rel = max(
                worst_rel,
                float(np.max(np.abs(state.wealth - w))) / scale_w,
                float(np.max(np.abs(income(state) - c))) / scale_c,
            )
            alive = np.nonzero(state.alive)[0]
            if alive.size >= 2:
                i, j = alive[0], alive[-1]
                worst_ratio = max(
                    worst_ratio,
                    abs(state.wealth[i] / state.wealth[j] - savings[i] / savings[j])
                    / (savings[i] / savings[j]),
                )
            state = step(state, np.nonzero(state.alive & (deaths == t))[0])
    verdict(
        capfd,
        "recursion-closed-form",
        worst_rel <= 1e-9 and worst_ratio <= 1e-10,
        f"max rel err {worst_rel:.2e}, max ratio err {worst_ratio:.2e}",
    )


def test_first_income_variance_formulas(capfd):
    from pooled_annuity import overlay_income_variance, reciprocal_survival_variance

    lt = constant_hazard_table(p=0.97, horizon=40, rate=0.01)
    p = lt.survival(1)
    reps = 1_000_000
    ok = True
    details = []
    for label, s in (
        ("homogeneous", np.ones(1000)),
        ("two-group", np.concatenate([np.ones(800), np.full(200, 10.0)])),
    ):
        amounts, counts = np.unique(s, return_counts=True)
        rng = np.random.default_rng(5)
        dead_mass = np.zeros(reps)
        alive_mass = np.zeros(reps)
        for a, c in zip(amounts, counts):
            dead = rng.binomial(int(c), 1.0 - p, reps)
            dead_mass += a * dead
            alive_mass += a * (int(c) - dead)

        member = 0
        growth = 1.0 + lt.interest_rate
        c0 = s[member] / lt.overlay_annuity_price(0)
        base = (s[member] - c0) * growth / lt.overlay_annuity_price(1)
        x = base * (1.0 + dead_mass / s.sum())
        var_x = float(np.var(x))
        se_x = math.sqrt(float(np.mean((x - x.mean()) ** 4)) - var_x**2) / math.sqrt(reps)
        ok &= abs(var_x - overlay_income_variance(s, lt, member)) <= 3.0 * se_x

        ratio = alive_mass / s.sum() / p
        var_r = float(np.var(ratio))
        se_r = math.sqrt(float(np.mean((ratio - ratio.mean()) ** 4)) - var_r**2) / math.sqrt(reps)
        ok &= abs(var_r - reciprocal_survival_variance(s, lt)) <= 3.0 * se_r
        details.append(f"{label}: income {var_x:.3e}, survival-ratio {var_r:.3e}")
    verdict(capfd, "first-income-variance", bool(ok), "; ".join(details))


def test_bridge_diagnostic(capfd):
    diag = bridge_covariance_check(np.ones(2000), 100_000, [0.25, 0.5, 0.75], seed=0)
    verdict(
        capfd,
        "brownian-bridge",
        diag.max_deviation < 0.01,
        f"max deviation {diag.max_deviation:.4f}",
    )
