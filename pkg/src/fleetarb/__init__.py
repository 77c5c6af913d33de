"""Spatio-temporal charging arbitrage planning for electric truck fleets.

The library builds and solves a mixed-integer linear program that
schedules charging, discharging, and travel for a fleet of bidirectional
electric delivery trucks across three priced locations, then simulates
operating scenarios and forecast-error replays.
"""

from .branchbound import (
    MilpSolution,
    SolveLimits,
    oracle_solve,
    solve_lp,
    solve_milp,
)
from .errors import (
    ConfigError,
    DataError,
    FleetArbError,
    InfeasibleError,
    OracleSizeError,
    SolverError,
)
from .milp import (
    MilpInstance,
    Mode,
    StartCondition,
    VarIndex,
    VarKind,
    build,
    build_counterfactual,
    evaluate_cost,
    pin_home_visits,
)
from .model import (
    ChargerSpec,
    DeliveryRequirement,
    FleetConfig,
    Horizon,
    Location,
    VehicleSpec,
    VisitWindow,
    parse_config,
    parse_config_file,
    sample_fleet,
    serialize_config,
)
from .mps import export_mps, format_mps
from .prices import (
    PricePanel,
    PriceSeries,
    ScenarioSet,
    TravelTimeTable,
    day_scenarios,
    default_travel_table,
    load_prices,
    load_travel_times,
    mean_panel,
    time_only_panel,
)
from .simplex import LpSolution
from .simulate import (
    FleetSchedule,
    ForecastReplay,
    Metrics,
    Scenario,
    ScenarioReport,
    account,
    audit_schedule,
    cancel_overlaps,
    count_trips,
    detect_trips,
    forecast_replay,
    run_scenario,
    schedule_from_solution,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
