"""Command-line front end.

One command with three paths: run scenarios and write reports (default),
export a day's instance as MPS (``--export-mps``), or cross-check the
embedded solver against the exhaustive oracle (``--verify``).  Every
behavior is a thin wrapper over library calls.

Exit codes: 0 ok, 1 verification failure, 2 config error, 3 data error,
4 infeasible, 5 limit reached before the gap target.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .branchbound import SolveLimits, oracle_solve, solve_milp
from .errors import (
    ConfigError,
    DataError,
    FleetArbError,
    InfeasibleError,
    OracleSizeError,
)
from .milp import Mode, StartCondition, build, pin_home_visits
from .model import FleetConfig, parse_config_file
from .mps import export_mps
from .prices import (
    PricePanel,
    ScenarioSet,
    default_travel_table,
    load_prices,
    load_travel_times,
)
from .reporting import summary_table, write_replay_report, write_report
from .simulate import (
    Scenario,
    audit_schedule,
    forecast_replay,
    run_scenario,
    schedule_from_solution,
)
from .synthetic import synthetic_price_pair

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4
EXIT_LIMIT = 5


@dataclass
class RunManifest:
    """Everything one invocation needs; all randomness flows from ``seed``."""

    config_path: Path
    prices_real: Path | None = None
    prices_dayahead: Path | None = None
    traffic: Path | None = None
    scenario: str = "all"
    days: int | None = None
    seed: int = 0
    gap: float = 1e-6
    time_limit_s: float | None = None
    max_nodes: int | None = None
    out_dir: Path = Path("out")
    plots: bool = True


def _limits(manifest: RunManifest) -> SolveLimits:
    return SolveLimits(
        time_s=manifest.time_limit_s, gap=manifest.gap, max_nodes=manifest.max_nodes
    )


def _load_inputs(manifest: RunManifest):
    config = parse_config_file(manifest.config_path)
    if manifest.days is not None:
        config = replace(config, horizon=replace(config.horizon, num_days=manifest.days))
    if manifest.prices_real is not None:
        real = load_prices(manifest.prices_real, config.horizon, config.location_names)
        dayahead = None
        if manifest.prices_dayahead is not None:
            dayahead = load_prices(
                manifest.prices_dayahead, config.horizon, config.location_names
            )
    else:
        dayahead, real = synthetic_price_pair(manifest.seed, config.horizon)
        if manifest.prices_dayahead is not None:
            dayahead = load_prices(
                manifest.prices_dayahead, config.horizon, config.location_names
            )
    if manifest.traffic is not None:
        travel = load_travel_times(manifest.traffic, config.horizon, config)
    else:
        travel = default_travel_table(config)
    return config, real, dayahead, travel


def _selected(manifest: RunManifest) -> list[Scenario]:
    if manifest.scenario == "all":
        return [Scenario.SPATIAL, Scenario.COUNTERFACTUAL, Scenario.STATIONARY]
    return [Scenario(manifest.scenario)]


def cmd_run(manifest: RunManifest) -> int:
    """Run the selected scenarios, write reports and figures, print the
    cost/distance/throughput summary."""
    config, real, dayahead, travel = _load_inputs(manifest)
    scenarios = ScenarioSet.single(real)
    limits = _limits(manifest)
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    reports = []
    hit_limit = False
    for which in _selected(manifest):
        report = run_scenario(config, scenarios, travel, which, limits)
        hit_limit |= report.hit_limit
        write_report(report, out)
        if manifest.plots:
            from .figures import render_report_figures

            render_report_figures(report, out, config.location_names)
        reports.append(report)

    print(summary_table(reports))

    if dayahead is not None:
        replay = forecast_replay(config, dayahead, real, travel, limits)
        hit_limit |= replay.hit_limit
        write_replay_report(replay, out)
        if manifest.plots:
            from .figures import render_replay_figure

            render_replay_figure(replay, out)
        print(
            f"forecast replay: planned {replay.planned_cost_usd:.2f} settled "
            f"{replay.settled_cost_usd:.2f} delta {replay.delta_usd:+.2f}"
        )

    return EXIT_LIMIT if hit_limit else EXIT_OK


def _day_instance(config: FleetConfig, real: PricePanel, travel, day: int):
    from .simulate import _day_config

    horizon = config.horizon
    if not 0 <= day < horizon.num_days:
        raise DataError(
            f"day out of range: {day} (horizon has {horizon.num_days} days)"
        )
    day_cfg = _day_config(config, day)
    panel = real.slice_steps(horizon.day_slice(day))
    return day_cfg, build(
        day_cfg,
        ScenarioSet.single(panel),
        travel,
        Mode.SPATIAL,
        start=(StartCondition.PRESENCE if day == 0 else StartCondition.DEPARTURE),
        step_offset=day * horizon.steps_per_day,
        name=f"fleet_day{day}",
    )


def cmd_export(manifest: RunManifest, day: int) -> int:
    """Write the selected day's instance in MPS form."""
    config, real, _, travel = _load_inputs(manifest)
    _, instance = _day_instance(config, real, travel, day)
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"day{day}.mps"
    export_mps(instance, path)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(manifest: RunManifest, max_binaries: int) -> int:
    """Solve day 0 with both the tree search and the exhaustive oracle,
    compare objectives, and audit the solved schedule."""
    config, real, _, travel = _load_inputs(manifest)
    day_cfg, instance = _day_instance(config, real, travel, 0)
    instance = pin_home_visits(instance, day_cfg)
    free = instance.free_binary_cols().size
    if free > max_binaries:
        raise OracleSizeError(
            f"instance has {free} free binaries; verify accepts <= {max_binaries}"
        )
    milp_sol = solve_milp(instance, _limits(manifest))
    oracle_sol = oracle_solve(instance, max_binaries)

    if milp_sol.status == "infeasible" or oracle_sol.status == "infeasible":
        agree = milp_sol.status == oracle_sol.status
        print(f"solver status {milp_sol.status}; oracle status {oracle_sol.status}")
        print("PASS" if agree else "FAIL")
        return EXIT_OK if agree else EXIT_VERIFY_FAIL

    diff = abs(milp_sol.objective - oracle_sol.objective)
    tol = 1e-6 * max(1.0, abs(oracle_sol.objective))
    ok = diff <= tol
    print(
        f"objective: solver {milp_sol.objective:.9g}  oracle "
        f"{oracle_sol.objective:.9g}  |diff| {diff:.3e} (tol {tol:.1e})"
    )
    schedule = schedule_from_solution(instance, milp_sol, day_cfg)
    violations = audit_schedule(schedule, day_cfg, travel, Scenario.SPATIAL)
    for v in violations:
        print(f"audit FAIL {v}")
    if not violations:
        print("audit PASS: all schedule invariants hold")
    ok = ok and not violations
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fleetarb",
        description="Plan charging, discharging, and travel for an electric "
        "delivery fleet across three priced locations.",
    )
    p.add_argument("--config", required=True, type=Path, help="fleet config (TOML)")
    p.add_argument("--prices-real", type=Path, help="real-time price CSV")
    p.add_argument("--prices-dayahead", type=Path, help="day-ahead price CSV")
    p.add_argument("--traffic", type=Path, help="typical traffic CSV")
    p.add_argument(
        "--scenario",
        choices=["spatial", "counterfactual", "stationary", "all"],
        default="all",
    )
    p.add_argument("--days", type=int, help="override the number of horizon days")
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic prices")
    p.add_argument("--gap", type=float, default=1e-6, help="relative gap target")
    p.add_argument("--time-limit-s", type=float, help="wall-clock limit per solve")
    p.add_argument("--max-nodes", type=int, help="node cap per solve")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p.add_argument("--export-mps", type=int, metavar="DAY", help="export one day as MPS")
    p.add_argument(
        "--verify", type=int, metavar="MAXBIN",
        help="cross-check the solver against the exhaustive oracle",
    )
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = RunManifest(
        config_path=args.config,
        prices_real=args.prices_real,
        prices_dayahead=args.prices_dayahead,
        traffic=args.traffic,
        scenario=args.scenario,
        days=args.days,
        seed=args.seed,
        gap=args.gap,
        time_limit_s=args.time_limit_s,
        max_nodes=args.max_nodes,
        out_dir=args.out_dir,
        plots=not args.no_plots,
    )
    for path in (manifest.config_path, manifest.prices_real,
                 manifest.prices_dayahead, manifest.traffic):
        if path is not None and not Path(path).exists():
            print(f"error: no such file: {path}", file=sys.stderr)
            return EXIT_CONFIG if path == manifest.config_path else EXIT_DATA

    try:
        if args.export_mps is not None:
            return cmd_export(manifest, args.export_mps)
        if args.verify is not None:
            return cmd_verify(manifest, args.verify)
        return cmd_run(manifest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataError, OracleSizeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FleetArbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAIL


if __name__ == "__main__":
    sys.exit(main())
