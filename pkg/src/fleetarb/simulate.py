"""Scenario orchestration: rolling per-day solves, accounting, audits.

Three operating scenarios are supported.  Spatial optimizes against the
true scenario-mean prices; Counterfactual plans against prices collapsed
to their cross-location mean and settles against the true prices;
Stationary pins the whole fleet at the warehouse (location A) and drops
delivery coverage.  Per-day solves decouple because every day must end
with the battery at its mandated final energy and the truck back home.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .branchbound import (
    STATUS_INFEASIBLE,
    MilpSolution,
    SolveLimits,
    solve_milp,
)
from .errors import DataError, InfeasibleError
from .milp import (
    CHARGE_KINDS,
    DISCHARGE_KINDS,
    IND_KINDS,
    MilpInstance,
    Mode,
    StartCondition,
    build,
    evaluate_cost,
)
from .model import LOCATIONS, FleetConfig, Location, VisitWindow
from .prices import (
    PricePanel,
    ScenarioSet,
    TravelTimeTable,
    mean_panel,
    time_only_panel,
)

SOC_TOL_KWH = 1e-6

THROUGHPUT_NOTE = (
    "throughput = sum over vehicles and steps of "
    "(eta_c*charge + discharge/eta_d + p_drive*driving) * dt"
)
COUNTERFACTUAL_NOTE = (
    "counterfactual planning price = cross-location mean at each step"
)


class Scenario(enum.Enum):
    SPATIAL = "spatial"
    COUNTERFACTUAL = "counterfactual"
    STATIONARY = "stationary"


@dataclass
class FleetSchedule:
    """Solved fleet operation: per vehicle and step, where each truck is
    and how much grid power flows, with the battery trajectory and run
    totals."""

    indicators: np.ndarray    # (N, T, 3) int8, at most one per step
    charge_kw: np.ndarray     # (N, T, 3) grid-side
    discharge_kw: np.ndarray  # (N, T, 3) grid-side
    soc_kwh: np.ndarray       # (N, T), end-of-step energy
    dt_hours: float
    steps_per_day: int
    cost_usd: float = 0.0
    distance_mi: float = 0.0
    throughput_kwh: float = 0.0

    @property
    def n_vehicles(self) -> int:
        return self.indicators.shape[0]

    @property
    def n_steps(self) -> int:
        return self.indicators.shape[1]

    def driving_mask(self) -> np.ndarray:
        """True where a vehicle has no location indicator set."""
        return self.indicators.sum(axis=2) == 0


@dataclass(frozen=True)
class Metrics:
    cost_usd: float
    distance_mi: float
    throughput_kwh: float


@dataclass
class ScenarioReport:
    """Everything the reporting layer needs for one scenario run."""

    scenario: Scenario
    schedule: FleetSchedule
    totals: Metrics
    day_metrics: list[Metrics]
    trip_matrix: np.ndarray          # (3, 3) ordered-pair counts
    net_power_kw: np.ndarray         # (T, 3) fleet charge - discharge
    vehicle_counts: np.ndarray       # (T, 3)
    fleet_soc_kwh: np.ndarray        # (T,)
    solver_gaps: list[float]
    hit_limit: bool
    notes: tuple[str, ...] = (THROUGHPUT_NOTE,)


def cancel_overlaps(charge_kw: np.ndarray, discharge_kw: np.ndarray):
    """Replace simultaneous charge and discharge at one location by their
    net flow.  Leaves settlement cost unchanged (it depends only on the
    net) and only reduces simultaneous flows."""
    overlap = np.minimum(charge_kw, discharge_kw)
    return charge_kw - overlap, discharge_kw - overlap


def recompute_soc(config: FleetConfig, indicators, charge_kw, discharge_kw,
                  e_start=None) -> np.ndarray:
    """Battery trajectory implied by the recursion, from each vehicle's
    starting energy."""
    n, t_total, _ = indicators.shape
    dt = config.horizon.dt_hours
    if e_start is None:
        e_start = config.e_init_array()
    soc = np.empty((n, t_total))
    for vi, v in enumerate(config.vehicles):
        inflow = v.eta_c * charge_kw[vi].sum(axis=1)
        outflow = discharge_kw[vi].sum(axis=1) / v.eta_d
        driving = indicators[vi].sum(axis=1) == 0
        flow = (inflow - outflow - v.p_drive_kw * driving) * dt
        soc[vi] = e_start[vi] + np.cumsum(flow)
    return soc


def schedule_from_solution(instance: MilpInstance, solution: MilpSolution,
                           config: FleetConfig, e_start=None) -> FleetSchedule:
    """Turn raw MILP column values into a cleaned schedule: indicators
    rounded, powers clamped at zero, overlapping charge/discharge
    cancelled, and the battery trajectory recomputed."""
    if solution.x is None:
        raise InfeasibleError("cannot extract a schedule from an infeasible solve")
    index = instance.index
    x = solution.x

    def block(kind):
        sl = index.block(kind)
        return x[sl].reshape(index.n_vehicles, -1)

    indicators = np.stack(
        [np.round(block(IND_KINDS[loc])).astype(np.int8) for loc in LOCATIONS], axis=2
    )
    charge = np.stack([block(CHARGE_KINDS[loc]) for loc in LOCATIONS], axis=2)
    discharge = np.stack([block(DISCHARGE_KINDS[loc]) for loc in LOCATIONS], axis=2)
    np.clip(charge, 0.0, None, out=charge)
    np.clip(discharge, 0.0, None, out=discharge)
    charge, discharge = cancel_overlaps(charge, discharge)
    soc = recompute_soc(config, indicators, charge, discharge, e_start)
    return FleetSchedule(
        indicators=indicators,
        charge_kw=charge,
        discharge_kw=discharge,
        soc_kwh=soc,
        dt_hours=instance.dt_hours,
        steps_per_day=instance.steps_per_day,
    )


# --------------------------------------------------------------------------
# Trip detection and accounting
# --------------------------------------------------------------------------


def _located_sequence(indicators_vehicle: np.ndarray) -> list[tuple[int, Location]]:
    """(step, location) points where exactly one indicator is set."""
    present = indicators_vehicle.sum(axis=1) == 1
    steps = np.flatnonzero(present)
    locs = indicators_vehicle[steps].argmax(axis=1)
    return [(int(t), Location(int(l))) for t, l in zip(steps, locs)]


@dataclass(frozen=True)
class Trip:
    vehicle: int
    origin: Location
    destination: Location
    depart_step: int   # last step at the origin
    arrive_step: int   # first step at the destination

    @property
    def gap_steps(self) -> int:
        return self.arrive_step - self.depart_step - 1


def detect_trips(schedule: FleetSchedule) -> list[Trip]:
    """Trips are maximal all-zero indicator gaps bracketed by two located
    steps at different locations.  Same-location brackets are lingering,
    not trips; unbracketed leading or trailing gaps are ignored."""
    trips = []
    for vi in range(schedule.n_vehicles):
        points = _located_sequence(schedule.indicators[vi])
        for (t0, l0), (t1, l1) in zip(points, points[1:]):
            if l0 != l1:
                trips.append(Trip(vi, l0, l1, t0, t1))
    return trips


def count_trips(schedule: FleetSchedule) -> np.ndarray:
    """3x3 ordered-pair trip counts with a zero diagonal."""
    matrix = np.zeros((3, 3), dtype=int)
    for trip in detect_trips(schedule):
        matrix[int(trip.origin), int(trip.destination)] += 1
    return matrix


def account(schedule: FleetSchedule, config: FleetConfig,
            travel: TravelTimeTable, panel: PricePanel) -> Metrics:
    """Cost, distance, and battery throughput for a schedule.

    Raises when a detected trip's gap is shorter than the travel table
    allows for that pair and departure time.
    """
    trips = detect_trips(schedule)
    distance = 0.0
    for trip in trips:
        need = travel.steps(trip.origin, trip.destination, trip.depart_step)
        if trip.gap_steps < need:
            raise DataError(
                f"malformed schedule: vehicle {trip.vehicle} trip "
                f"{trip.origin.name}->{trip.destination.name} departing step "
                f"{trip.depart_step} bridges {trip.gap_steps} steps but travel "
                f"needs {need}"
            )
        distance += config.distances_mi[(trip.origin, trip.destination)]

    dt = schedule.dt_hours
    driving = schedule.driving_mask()
    p_drive = np.array([v.p_drive_kw for v in config.vehicles])[:, None]
    eta_c = np.array([v.eta_c for v in config.vehicles])[:, None, None]
    eta_d = np.array([v.eta_d for v in config.vehicles])[:, None, None]
    throughput = float(
        ((eta_c * schedule.charge_kw).sum()
         + (schedule.discharge_kw / eta_d).sum()
         + (p_drive * driving).sum()) * dt
    )
    cost = evaluate_cost(schedule, panel)
    return Metrics(cost_usd=cost, distance_mi=distance, throughput_kwh=throughput)


# --------------------------------------------------------------------------
# Constraint audit
# --------------------------------------------------------------------------


def audit_schedule(schedule: FleetSchedule, config: FleetConfig,
                   travel: TravelTimeTable,
                   scenario: Scenario = Scenario.SPATIAL) -> list[str]:
    """Check every operating invariant on a schedule; returns violation
    descriptions naming the offending constraint, empty when clean."""
    out = []
    n, t_total = schedule.n_vehicles, schedule.n_steps
    spd = schedule.steps_per_day
    num_days = t_total // spd
    stationary = scenario is Scenario.STATIONARY
    expect_soc = recompute_soc(
        config, schedule.indicators, schedule.charge_kw, schedule.discharge_kw
    )

    for vi, v in enumerate(config.vehicles):
        ind = schedule.indicators[vi]
        sums = ind.sum(axis=1)
        for t in np.flatnonzero(sums > 1):
            out.append(f"oneloc_n{vi}_t{t}: {sums[t]} indicators set")

        # Battery recursion and bounds.
        drift = np.abs(schedule.soc_kwh[vi] - expect_soc[vi])
        for t in np.flatnonzero(drift > SOC_TOL_KWH):
            out.append(f"soc_n{vi}_t{t}: recursion off by {drift[t]:.3e} kWh")
        soc = schedule.soc_kwh[vi]
        for t in np.flatnonzero(soc < v.e_min_kwh - SOC_TOL_KWH):
            out.append(f"socmin_n{vi}_t{t}: {soc[t]:.6f} below {v.e_min_kwh}")
        for t in np.flatnonzero(soc > v.capacity_kwh + SOC_TOL_KWH):
            out.append(f"socmax_n{vi}_t{t}: {soc[t]:.6f} above {v.capacity_kwh}")
        for d in range(1, num_days + 1):
            t = d * spd - 1
            if abs(soc[t] - v.e_final_kwh) > SOC_TOL_KWH:
                out.append(
                    f"efinal_n{vi}_d{d - 1}: day ends at {soc[t]:.6f}, "
                    f"wants {v.e_final_kwh}"
                )

        # Charging requires presence.
        flows = schedule.charge_kw[vi] + schedule.discharge_kw[vi]
        bad = (flows > 1e-6) & (ind == 0)
        for t, l in zip(*np.nonzero(bad)):
            out.append(f"gate_{Location(l).name}_n{vi}_t{t}: power without presence")

        home = Location.A if stationary else v.home
        if stationary:
            if not np.all(ind[:, int(Location.A)] == 1):
                out.append(f"stationary_n{vi}: vehicle leaves the warehouse")
        else:
            if ind[0, int(home)] != 1:
                out.append(f"start_n{vi}: not at {home.name} in step 0")
            for d in range(1, num_days + 1):
                t = d * spd - 1
                if ind[t, int(home)] != 1:
                    out.append(f"return_n{vi}_d{d - 1}: not home at step {t}")

    # Travel gaps.
    for trip in detect_trips(schedule):
        need = travel.steps(trip.origin, trip.destination, trip.depart_step)
        if trip.gap_steps < need:
            out.append(
                f"trv_{trip.origin.name}{trip.destination.name}_n{trip.vehicle}"
                f"_t{trip.depart_step}: gap {trip.gap_steps} < travel {need}"
            )

    # Delivery coverage per window.
    if not stationary:
        windows = (
            [(d * spd, (d + 1) * spd) for d in range(num_days)]
            if config.delivery.window is VisitWindow.PER_DAY
            else [(0, t_total)]
        )
        for w, (a, b) in enumerate(windows):
            for loc in LOCATIONS:
                need = config.delivery.min_visits[loc]
                if need == 0:
                    continue
                visitors = int(
                    (schedule.indicators[:, a:b, int(loc)].sum(axis=1) > 0).sum()
                )
                if visitors < need:
                    out.append(
                        f"deliv_{loc.name}_d{w}: {visitors} visitors, needs {need}"
                    )
    return out


# --------------------------------------------------------------------------
# Scenario runs
# --------------------------------------------------------------------------


def _day_config(config: FleetConfig, day: int) -> FleetConfig:
    horizon = replace(config.horizon, num_days=1)
    vehicles = config.vehicles
    if day > 0:
        vehicles = tuple(replace(v, e_init_kwh=v.e_final_kwh) for v in vehicles)
    return replace(config, vehicles=vehicles, horizon=horizon)


def _solve_panel(config: FleetConfig, plan_panel: PricePanel,
                 travel: TravelTimeTable, mode: Mode,
                 limits: SolveLimits | None,
                 name: str) -> tuple[FleetSchedule, list[float], bool]:
    """Solve the horizon day by day (when windows are daily) or in one
    piece, returning the assembled schedule plus per-solve gaps."""
    horizon = config.horizon
    per_day = (
        config.delivery.window is VisitWindow.PER_DAY and horizon.num_days > 1
    )
    gaps: list[float] = []
    hit_limit = False
    pieces: list[FleetSchedule] = []
    if per_day:
        spd = horizon.steps_per_day
        for day in range(horizon.num_days):
            day_cfg = _day_config(config, day)
            panel_slice = plan_panel.slice_steps(horizon.day_slice(day))
            instance = build(
                day_cfg,
                ScenarioSet.single(panel_slice),
                travel,
                mode,
                start=(StartCondition.PRESENCE if day == 0 else StartCondition.DEPARTURE),
                step_offset=day * spd,
                name=f"{name}_day{day}",
            )
            sol = solve_milp(instance, limits)
            if sol.status == STATUS_INFEASIBLE or sol.x is None:
                raise InfeasibleError(f"{name}: day {day} has no feasible schedule")
            gaps.append(sol.gap)
            hit_limit |= sol.hit_limit
            pieces.append(
                schedule_from_solution(instance, sol, day_cfg,
                                       e_start=day_cfg.e_init_array())
            )
        schedule = FleetSchedule(
            indicators=np.concatenate([p.indicators for p in pieces], axis=1),
            charge_kw=np.concatenate([p.charge_kw for p in pieces], axis=1),
            discharge_kw=np.concatenate([p.discharge_kw for p in pieces], axis=1),
            soc_kwh=np.concatenate([p.soc_kwh for p in pieces], axis=1),
            dt_hours=horizon.dt_hours,
            steps_per_day=horizon.steps_per_day,
        )
    else:
        instance = build(
            config, ScenarioSet.single(plan_panel), travel, mode, name=name
        )
        sol = solve_milp(instance, limits)
        if sol.status == STATUS_INFEASIBLE or sol.x is None:
            raise InfeasibleError(f"{name}: no feasible schedule")
        gaps.append(sol.gap)
        hit_limit = sol.hit_limit
        schedule = schedule_from_solution(instance, sol, config)
    return schedule, gaps, hit_limit


def _day_metrics(schedule: FleetSchedule, config: FleetConfig,
                 travel: TravelTimeTable, panel: PricePanel) -> list[Metrics]:
    """Per-day accounting; trips belong to the day of their departure."""
    spd = schedule.steps_per_day
    num_days = schedule.n_steps // spd
    dt = schedule.dt_hours
    trips = detect_trips(schedule)
    day_distance = [0.0] * num_days
    for trip in trips:
        day_distance[trip.depart_step // spd] += config.distances_mi[
            (trip.origin, trip.destination)
        ]
    out = []
    driving = schedule.driving_mask()
    p_drive = np.array([v.p_drive_kw for v in config.vehicles])[:, None]
    eta_c = np.array([v.eta_c for v in config.vehicles])[:, None, None]
    eta_d = np.array([v.eta_d for v in config.vehicles])[:, None, None]
    for d in range(num_days):
        sl = slice(d * spd, (d + 1) * spd)
        net = (schedule.charge_kw[:, sl] - schedule.discharge_kw[:, sl]).sum(axis=0)
        cost = float((net * panel.values[:, sl].T).sum() * dt)
        throughput = float(
            ((eta_c * schedule.charge_kw[:, sl]).sum()
             + (schedule.discharge_kw[:, sl] / eta_d).sum()
             + (p_drive * driving[:, sl]).sum()) * dt
        )
        out.append(Metrics(cost, day_distance[d], throughput))
    return out


def run_scenario(config: FleetConfig, scenarios: ScenarioSet,
                 travel: TravelTimeTable, which: Scenario,
                 limits: SolveLimits | None = None) -> ScenarioReport:
    """Solve one operating scenario and assemble its report.

    Planning prices follow the scenario definition; settlement always uses
    the scenario-mean (true) prices.
    """
    true_panel = mean_panel(scenarios)
    if which is Scenario.COUNTERFACTUAL:
        plan_panel = time_only_panel(true_panel)
        mode = Mode.SPATIAL
    elif which is Scenario.STATIONARY:
        plan_panel = true_panel
        mode = Mode.STATIONARY
    else:
        plan_panel = true_panel
        mode = Mode.SPATIAL

    schedule, gaps, hit_limit = _solve_panel(
        config, plan_panel, travel, mode, limits, name=which.value
    )
    day_metrics = _day_metrics(schedule, config, travel, true_panel)
    # Totals are the exact sums of the per-day rows.
    totals = Metrics(
        cost_usd=float(sum(m.cost_usd for m in day_metrics)),
        distance_mi=float(sum(m.distance_mi for m in day_metrics)),
        throughput_kwh=float(sum(m.throughput_kwh for m in day_metrics)),
    )
    schedule.cost_usd = totals.cost_usd
    schedule.distance_mi = totals.distance_mi
    schedule.throughput_kwh = totals.throughput_kwh

    notes = [THROUGHPUT_NOTE]
    if which is Scenario.COUNTERFACTUAL:
        notes.append(COUNTERFACTUAL_NOTE)
    return ScenarioReport(
        scenario=which,
        schedule=schedule,
        totals=totals,
        day_metrics=day_metrics,
        trip_matrix=count_trips(schedule),
        net_power_kw=(schedule.charge_kw - schedule.discharge_kw).sum(axis=0),
        vehicle_counts=schedule.indicators.sum(axis=0),
        fleet_soc_kwh=schedule.soc_kwh.sum(axis=0),
        solver_gaps=gaps,
        hit_limit=hit_limit,
        notes=tuple(notes),
    )


@dataclass
class ForecastReplay:
    """Planned-on-forecast vs settled-on-actual costs."""

    planned_cost_usd: float
    settled_cost_usd: float
    day_planned: list[float]
    day_settled: list[float]
    schedule: FleetSchedule
    hit_limit: bool

    @property
    def delta_usd(self) -> float:
        return self.settled_cost_usd - self.planned_cost_usd

    @property
    def day_deltas(self) -> list[float]:
        return [s - p for p, s in zip(self.day_planned, self.day_settled)]


def forecast_replay(config: FleetConfig, day_ahead: PricePanel,
                    real_time: PricePanel, travel: TravelTimeTable,
                    limits: SolveLimits | None = None) -> ForecastReplay:
    """Plan on forecast prices, settle on actual prices, report the gap."""
    if day_ahead.n_steps != real_time.n_steps:
        raise DataError("forecast and settlement panels must share one horizon")
    schedule, _, hit_limit = _solve_panel(
        config, day_ahead, travel, Mode.SPATIAL, limits, name="replay"
    )
    spd = schedule.steps_per_day
    num_days = schedule.n_steps // spd
    dt = schedule.dt_hours
    day_planned, day_settled = [], []
    net = (schedule.charge_kw - schedule.discharge_kw).sum(axis=0)  # (T, 3)
    for d in range(num_days):
        sl = slice(d * spd, (d + 1) * spd)
        day_planned.append(float((net[sl] * day_ahead.values[:, sl].T).sum() * dt))
        day_settled.append(float((net[sl] * real_time.values[:, sl].T).sum() * dt))
    return ForecastReplay(
        planned_cost_usd=float(sum(day_planned)),
        settled_cost_usd=float(sum(day_settled)),
        day_planned=day_planned,
        day_settled=day_settled,
        schedule=schedule,
        hit_limit=hit_limit,
    )
