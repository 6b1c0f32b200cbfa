"""Command-line surface tying the modules into reproducible experiments.

Every subcommand is deterministic given its full flag set (seed included)
and writes a JSON manifest next to each CSV so downstream plotting never
has to recompute a number.

Exit codes: 0 success, 2 input errors, 3 numerical-domain errors.
"""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np

from . import __version__
from .approximation import ApproxInputs, approx_time, approx_u, donsker_scale
from .fund_engine import income, init_fund, savings_vector, step
from .life_table import LifeTable, LifeTableError, load_life_table
from .pool_metrics import SavingsHashMap, best_prefix, cap_advise, is_beneficial, implied_number
from .stability_mc import StabilityParams, estimate_max_stable_time, estimate_max_stable_u

LIFE_TABLE_ENV = "POOLED_ANNUITY_LIFE_TABLE"

EXIT_INPUT_ERROR = 2
EXIT_DOMAIN_ERROR = 3

TABLE1_RATIOS = (1.0, 0.7, 0.5, 0.3, 0.2, 0.1)


class InputError(click.ClickException):
    exit_code = EXIT_INPUT_ERROR


class DomainError(click.ClickException):
    exit_code = EXIT_DOMAIN_ERROR


def parse_savings(spec: str) -> np.ndarray:
    """Savings from a CSV path (one amount per row) or ``count@amount,...``."""
    path = Path(spec)
    try:
        if path.exists():
            amounts = []
            with path.open(newline="") as handle:
                for row in csv.reader(handle):
                    if not row or row[0].strip().lower() in ("", "amount"):
                        continue
                    amounts.append(float(row[0]))
            return savings_vector(amounts)
        parts = []
        for chunk in spec.split(","):
            count_text, _, amount_text = chunk.partition("@")
            if not amount_text:
                raise ValueError(f"bad savings chunk {chunk!r}; expected count@amount")
            parts.append(np.full(int(count_text), float(amount_text)))
        return savings_vector(np.concatenate(parts))
    except (ValueError, OSError) as exc:
        raise InputError(f"invalid savings spec {spec!r}: {exc}") from exc


def _two_group(n_poor: int, total: int, ratio: float) -> np.ndarray:
    return np.concatenate([np.full(n_poor, ratio), np.full(total - n_poor, 1.0)])


def _load_table(
    life_table: Optional[str], base_age: Optional[int], rate: Optional[float], required: bool
) -> Optional[LifeTable]:
    path = life_table or os.environ.get(LIFE_TABLE_ENV)
    if path is None:
        if required:
            raise InputError("a life table is required (--life-table or env var)")
        return None
    if base_age is None or rate is None:
        raise InputError("--base-age and --rate are required with a life table")
    try:
        return load_life_table(path, base_age, rate)
    except (LifeTableError, OSError) as exc:
        raise InputError(str(exc)) from exc


def _stability_params(eps1: float, eps2: Optional[float], eps2_inf: bool, beta: float) -> StabilityParams:
    try:
        upper = math.inf if eps2_inf or eps2 is None else eps2
        return StabilityParams(eps_lower=eps1, eps_upper=upper, beta=beta)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(csv_path: Path, kind: str, params: dict) -> None:
    manifest = {"kind": kind, "version": __version__, **params}
    csv_path.with_suffix(csv_path.suffix + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def life_table_options(func):
    func = click.option("--rate", type=float, default=None, help="Per-period interest rate R.")(func)
    func = click.option("--base-age", type=int, default=None, help="Age of every member at time 0.")(func)
    func = click.option(
        "--life-table", type=click.Path(), default=None, help=f"Mortality CSV (or ${LIFE_TABLE_ENV})."
    )(func)
    return func


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Pooled annuity fund stability experiments."""


@main.command()
@click.option("--savings", required=True, help="CSV path or count@amount[,count@amount...].")
@click.option("--eps1", type=float, default=0.1, show_default=True)
@click.option("--eps2", type=float, default=None, help="Upper bound; omitted means infinite.")
@click.option("--eps2-inf", is_flag=True, default=False, help="Force an infinite upper bound.")
@click.option("--beta", type=float, default=0.9, show_default=True)
@click.option("--reps", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tau-out", type=click.Path(), default=None, help="Optional CSV of tau samples.")
@life_table_options
def stability(savings, eps1, eps2, eps2_inf, beta, reps, seed, tau_out, life_table, base_age, rate):
    """Monte Carlo estimate of the maximal stable time."""
    pool = parse_savings(savings)
    params = _stability_params(eps1, eps2, eps2_inf, beta)
    lt = _load_table(life_table, base_age, rate, required=False)
    try:
        if lt is None:
            est = estimate_max_stable_u(pool, params, reps, seed)
        else:
            est = estimate_max_stable_time(pool, params, lt, reps, seed)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    if tau_out is not None:
        from .stability_mc import sample_tau

        taus = sample_tau(pool, params, reps, seed)
        _write_csv(Path(tau_out), ["tau_transformed_time"], [[f"{t:.12g}"] for t in taus])
        _write_manifest(Path(tau_out), "tau-samples", {"seed": seed, "reps": reps})
    click.echo(
        json.dumps(
            {"u_star": est.u_star, "t_star": est.t_star, "se": est.std_error_u, "reps": reps}
        )
    )


@main.command()
@click.option("--savings", required=True)
@click.option("--eps1", type=float, default=0.1, show_default=True)
@click.option("--beta", type=float, default=0.9, show_default=True)
@life_table_options
def approx(savings, eps1, beta, life_table, base_age, rate):
    """Analytic approximation of the maximal stable time."""
    pool = parse_savings(savings)
    lt = _load_table(life_table, base_age, rate, required=False)
    try:
        inputs = ApproxInputs(implied_number(pool), eps1, beta)
        u = approx_u(inputs)
        t = None if lt is None else lt.f_inverse(u)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    click.echo(json.dumps({"u": u, "t": t}))


@main.command()
@click.option("--savings", required=True)
@click.option("--eps1", type=float, default=0.1, show_default=True)
@click.option("--beta", type=float, default=0.9, show_default=True)
@click.option("--reps", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Output CSV path.")
@life_table_options
def compare(savings, eps1, beta, reps, seed, out, life_table, base_age, rate):
    """Run the Monte Carlo and the approximation and tabulate the error."""
    pool = parse_savings(savings)
    params = _stability_params(eps1, None, True, beta)
    lt = _load_table(life_table, base_age, rate, required=False)
    try:
        est = estimate_max_stable_u(pool, params, reps, seed)
        u_a = approx_u(ApproxInputs(implied_number(pool), eps1, beta))
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    rows = [["u_transformed_time", f"{est.u_star:.10g}", f"{u_a:.10g}", f"{est.u_star - u_a:.10g}"]]
    if lt is not None:
        t_mc, t_a = lt.f_inverse(est.u_star), lt.f_inverse(u_a)
        rows.append(["t_years", f"{t_mc:.10g}", f"{t_a:.10g}", f"{t_mc - t_a:.10g}"])
    out_path = Path(out)
    _write_csv(out_path, ["metric", "value", "approximation", "difference"], rows)
    _write_manifest(out_path, "error-panel", {"seed": seed, "reps": reps, "eps1": eps1, "beta": beta})
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--savings", required=True)
def nu(savings):
    """Implied number of homogeneous members."""
    pool = parse_savings(savings)
    click.echo(
        json.dumps(
            {
                "nu": implied_number(pool),
                "members": int(pool.size),
                "donsker_scale": donsker_scale(pool),
            }
        )
    )


@main.command()
@click.option("--savings", required=True)
@click.option("--prefix-out", type=click.Path(), default=None, help="Optional prefix table CSV.")
def beneficial(savings, prefix_out):
    """Whether the whole roster attains the maximal implied number."""
    pool = parse_savings(savings)
    h = SavingsHashMap.from_savings(pool)
    i_star, nu_max, per_prefix = best_prefix(h)
    if prefix_out is not None:
        _write_prefix_table(Path(prefix_out), h, per_prefix, {"command": "beneficial"})
    click.echo(
        json.dumps(
            {
                "beneficial": is_beneficial(h),
                "best_prefix": i_star,
                "nu_max": nu_max,
                "nu_full": float(per_prefix[-1]),
            }
        )
    )


def _write_prefix_table(path: Path, h: SavingsHashMap, per_prefix: np.ndarray, params: dict) -> None:
    rows = [
        [f"{z:.10g}", f"{c:.10g}", f"{v:.10g}"]
        for z, c, v in zip(h.amounts, np.cumsum(h.counts), per_prefix)
    ]
    _write_csv(path, ["z", "cumulative_count", "cumulative_nu"], rows)
    _write_manifest(path, "histogram-prefix", params)


@main.command("cap-advise")
@click.option("--savings", required=True)
@click.option("--eps1", type=float, default=0.1, show_default=True)
@click.option("--beta", type=float, default=0.9, show_default=True)
@click.option("--slack", type=float, default=0.03, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Optional prefix table CSV.")
@life_table_options
def cap_advise_cmd(savings, eps1, beta, slack, out, life_table, base_age, rate):
    """Recommend a maximal savings level for pool membership."""
    pool = parse_savings(savings)
    lt = _load_table(life_table, base_age, rate, required=False)
    params = _stability_params(eps1, None, True, beta)
    try:
        advice = cap_advise(pool, lt, params, slack=slack)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    if out is not None:
        h = SavingsHashMap.from_savings(pool)
        _write_prefix_table(
            Path(out), h, advice.cumulative_nu, {"command": "cap-advise", "slack": slack}
        )
    click.echo(
        json.dumps(
            {
                "cap_range": list(advice.cap_range),
                "window_members": [
                    float(advice.cumulative_counts[advice.window[0] - 1]),
                    float(advice.cumulative_counts[advice.window[1] - 1]),
                ],
                "nu_max": advice.nu_max,
                "nu_full": advice.nu_full,
                "beneficial": advice.beneficial,
                "capped_years": None if advice.capped_years is None else list(advice.capped_years),
                "uncapped_years": advice.uncapped_years,
            }
        )
    )


def _simulate_path(pool: np.ndarray, lt: LifeTable, seed: int):
    """One seeded death scenario; yields (state, credits received) per period."""
    rng = np.random.default_rng(seed)
    lifetimes = np.array([lt.f_inverse(u) for u in rng.random(pool.size)])
    state = init_fund(pool, lt)
    growth = 1.0 + lt.interest_rate
    credits = np.zeros(pool.size)
    while True:
        yield state, credits
        if not np.any(state.alive) or state.time >= lt.horizon - 1:
            return
        t = state.time
        newly_dead = np.nonzero(state.alive & (lifetimes > t) & (lifetimes <= t + 1))[0]
        grown = np.where(state.alive, (state.wealth - income(state)) * growth, 0.0)
        state = step(state, newly_dead)
        credits = np.where(state.alive, state.wealth - grown, 0.0)


@main.command("fund-path")
@click.option("--savings", required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@life_table_options
def fund_path(savings, seed, out, life_table, base_age, rate):
    """Per-period wealth/income/credit CSV for one seeded scenario."""
    pool = parse_savings(savings)
    lt = _load_table(life_table, base_age, rate, required=True)
    rows = []
    for state, credits in _simulate_path(pool, lt, seed):
        payments = income(state)
        for member in range(pool.size):
            rows.append(
                [
                    state.time,
                    member,
                    f"{state.wealth[member]:.10g}",
                    f"{payments[member]:.10g}",
                    f"{credits[member]:.10g}",
                ]
            )
    out_path = Path(out)
    _write_csv(out_path, ["time_years", "member", "wealth", "income", "credit"], rows)
    _write_manifest(out_path, "fund-path", {"seed": seed})
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--reps", type=int, default=100_000, show_default=True)
@click.option("--paper-fidelity", is_flag=True, default=False, help="Use 10^6 replications.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@life_table_options
def table1(reps, paper_fidelity, seed, out, life_table, base_age, rate):
    """Maximal stable time for poor/rich/mixed pools over savings ratios."""
    lt = _load_table(life_table, base_age, rate, required=True)
    reps = 1_000_000 if paper_fidelity else reps
    params = StabilityParams(eps_lower=0.1, eps_upper=math.inf, beta=0.9)
    rows = []
    try:
        for ratio in TABLE1_RATIOS:
            pools = {
                "poor": np.full(800, ratio),
                "rich": np.full(200, 1.0),
                "mixed": _two_group(800, 1000, ratio),
            }
            for group, pool in pools.items():
                est = estimate_max_stable_time(pool, params, lt, reps, seed)
                t_a = approx_time(ApproxInputs(implied_number(pool), 0.1, 0.9), lt)
                rows.append([group, f"{ratio:g}", f"{est.t_star:.4f}", f"{t_a:.4f}"])
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    out_path = Path(out)
    _write_csv(out_path, ["group", "m_over_M", "years_mc", "years_approx"], rows)
    _write_manifest(out_path, "error-panel", {"seed": seed, "reps": reps})
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--n1-grid", default="100,200,300,400,500,600,700,800,900", show_default=True)
@click.option("--ratio-grid", default="0.1,0.2,0.3,0.5,0.7,1.0", show_default=True)
@click.option("--total", type=int, default=1000, show_default=True)
@click.option("--reps", type=int, default=100_000, show_default=True)
@click.option("--paper-fidelity", is_flag=True, default=False)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@life_table_options
def sweep(n1_grid, ratio_grid, total, reps, paper_fidelity, seed, out, life_table, base_age, rate):
    """Three-curve sweep (poor-only, rich-only, mixed) in long format."""
    lt = _load_table(life_table, base_age, rate, required=True)
    reps = 1_000_000 if paper_fidelity else reps
    try:
        n1_values = [int(v) for v in n1_grid.split(",")]
        ratios = [float(v) for v in ratio_grid.split(",")]
    except ValueError as exc:
        raise InputError(f"bad grid: {exc}") from exc
    if not n1_values or not ratios:
        raise InputError("sweep grids must be non-empty")
    params = StabilityParams(eps_lower=0.1, eps_upper=math.inf, beta=0.9)
    rows = []
    try:
        for n1 in n1_values:
            if not 0 < n1 < total:
                raise InputError(f"n1 {n1} must lie strictly between 0 and {total}")
            for ratio in ratios:
                pools = {
                    "poor": np.full(n1, ratio),
                    "rich": np.full(total - n1, 1.0),
                    "mixed": _two_group(n1, total, ratio),
                }
                for group, pool in pools.items():
                    est = estimate_max_stable_time(pool, params, lt, reps, seed)
                    rows.append([group, n1, f"{ratio:g}", f"{est.t_star:.4f}"])
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    out_path = Path(out)
    _write_csv(out_path, ["group", "n_poor", "m_over_M", "years_mc"], rows)
    _write_manifest(out_path, "sweep-curves", {"seed": seed, "reps": reps, "total": total})
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--reps", type=int, default=100_000, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@life_table_options
def figure1(seed, reps, out, life_table, base_age, rate):
    """Income-ratio path of a 900 poor + 100 rich pool with 10% bands."""
    lt = _load_table(life_table, base_age, rate, required=True)
    pool = np.concatenate([np.full(900, 1.0), np.full(100, 10.0)])
    params = StabilityParams(eps_lower=0.1, eps_upper=0.1, beta=0.9)
    try:
        marker = estimate_max_stable_time(pool, params, lt, reps, seed).t_star
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    rows = []
    for state, _credits in _simulate_path(pool, lt, seed):
        payments = income(state)
        alive = np.nonzero(state.alive)[0]
        if alive.size == 0:
            break
        member = alive[0]
        ratio = payments[member] / (pool[member] / lt.annuity_price(0))
        rows.append([state.time, f"{ratio:.8f}", "0.9", "1.1", f"{marker:.4f}"])
    out_path = Path(out)
    _write_csv(
        out_path,
        ["time_years", "income_ratio", "band_lower", "band_upper", "marker_years"],
        rows,
    )
    _write_manifest(out_path, "path-band", {"seed": seed, "reps": reps})
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
