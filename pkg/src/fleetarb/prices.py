"""Price panels, scenario sets, and travel-time tables.

Loaders are pure functions; returned panels are immutable arrays and safe
to share.  Prices are stored in $/kWh (input files carry $/MWh), and all
series are aligned to the configured horizon.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

from .errors import DataError
from .model import DEFAULT_LOCATION_NAMES, LOCATIONS, FleetConfig, Horizon, Location


@dataclass(frozen=True)
class PriceSeries:
    """Per-step energy prices at one location, $/kWh."""

    location: Location
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise DataError("price series must be one-dimensional")
        if not np.all(np.isfinite(vals)):
            raise DataError(f"non-finite price in series for location {self.location.name}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class PricePanel:
    """Prices for all three locations over a common horizon.

    ``values`` has shape (3, T) indexed by ``Location``.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != len(LOCATIONS):
            raise DataError("price panel must have shape (3, T)")
        if not np.all(np.isfinite(vals)):
            raise DataError("non-finite price in panel")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_series(cls, series: dict[Location, PriceSeries] | list[PriceSeries]) -> "PricePanel":
        if isinstance(series, dict):
            ordered = [series[loc] for loc in LOCATIONS]
        else:
            by_loc = {s.location: s for s in series}
            if set(by_loc) != set(LOCATIONS):
                raise DataError("panel requires exactly one series per location")
            ordered = [by_loc[loc] for loc in LOCATIONS]
        lengths = {len(s.values) for s in ordered}
        if len(lengths) != 1:
            raise DataError(f"price series lengths differ: {sorted(lengths)}")
        return cls(np.stack([s.values for s in ordered]))

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]

    def series(self, location: Location) -> np.ndarray:
        return self.values[int(location)]

    def slice_steps(self, sl: slice) -> "PricePanel":
        return PricePanel(self.values[:, sl])


@dataclass(frozen=True)
class ScenarioSet:
    """Equally weighted price realizations over one shared horizon."""

    scenarios: tuple[PricePanel, ...]

    def __post_init__(self) -> None:
        panels = tuple(self.scenarios)
        if len(panels) < 1:
            raise DataError("scenario set requires at least one panel")
        steps = {p.n_steps for p in panels}
        if len(steps) != 1:
            raise DataError("all scenario panels must share one horizon")
        object.__setattr__(self, "scenarios", panels)

    @property
    def k(self) -> int:
        return len(self.scenarios)

    @property
    def n_steps(self) -> int:
        return self.scenarios[0].n_steps

    @classmethod
    def single(cls, panel: PricePanel) -> "ScenarioSet":
        return cls((panel,))


def mean_panel(scenario_set: ScenarioSet) -> PricePanel:
    """Arithmetic mean of the scenario panels (equal probability masses).

    Exact (bit-identical) when the set is a single panel or all panels
    coincide, so instances built from a set and from its mean agree
    byte for byte.
    """
    first = scenario_set.scenarios[0]
    if all(np.array_equal(p.values, first.values) for p in scenario_set.scenarios[1:]):
        return first
    stacked = np.stack([p.values for p in scenario_set.scenarios])
    return PricePanel(stacked.mean(axis=0))


def time_only_panel(panel: PricePanel) -> PricePanel:
    """Collapse spatial structure: every location gets the cross-location
    mean price at each step."""
    mean = panel.values.mean(axis=0)
    return PricePanel(np.broadcast_to(mean, panel.values.shape))


def day_scenarios(panel: PricePanel, horizon: Horizon) -> ScenarioSet:
    """Slice a long historical panel into horizon-length scenarios.

    One scenario starts at each historical day boundary, so a panel
    covering D days yields K = D - num_days + 1 scenarios.
    """
    s = horizon.steps_per_day
    total = horizon.total_steps
    if panel.n_steps < total:
        raise DataError(
            f"panel has {panel.n_steps} steps but the horizon needs {total}"
        )
    n_starts = (panel.n_steps - total) // s + 1
    return ScenarioSet(
        tuple(panel.slice_steps(slice(k * s, k * s + total)) for k in range(n_starts))
    )


# --------------------------------------------------------------------------
# CSV ingestion
# --------------------------------------------------------------------------

PRICE_HEADER = ["timestamp", "zone", "price_per_mwh"]
TRAFFIC_HEADER = ["origin", "destination", "depart_hhmm", "minutes"]


def _zone_map(config_or_names) -> dict[str, Location]:
    if config_or_names is None:
        names = DEFAULT_LOCATION_NAMES
    elif isinstance(config_or_names, FleetConfig):
        names = config_or_names.location_names
    else:
        names = config_or_names
    mapping = {label: loc for loc, label in names.items()}
    for loc in LOCATIONS:
        mapping.setdefault(loc.name, loc)
    return mapping


def load_prices(path, horizon: Horizon, location_names=None) -> PricePanel:
    """Load a ``timestamp,zone,price_per_mwh`` CSV into a price panel.

    Rows must cover the horizon for all three zones at the horizon's step
    length with no gaps; prices are converted from $/MWh to $/kWh.  Files
    longer than the horizon are trimmed to its first ``total_steps`` rows
    per zone.
    """
    zone_of = _zone_map(location_names)
    per_loc: dict[Location, list[tuple[datetime, float]]] = {loc: [] for loc in LOCATIONS}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != PRICE_HEADER:
            raise DataError(
                f"{path}: expected header {','.join(PRICE_HEADER)!r}, got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            ts_text, zone, price_text = (f.strip() for f in row)
            if zone not in zone_of:
                raise DataError(f"{path}:{lineno}: unknown zone {zone!r}")
            try:
                ts = datetime.fromisoformat(ts_text)
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad timestamp {ts_text!r}") from None
            try:
                price = float(price_text)
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric price {price_text!r}") from None
            per_loc[zone_of[zone]].append((ts, price))

    step = timedelta(hours=horizon.dt_hours)
    total = horizon.total_steps
    series = {}
    for loc in LOCATIONS:
        rows = sorted(per_loc[loc], key=lambda r: r[0])
        for (t0, _), (t1, _) in zip(rows, rows[1:]):
            if t1 - t0 != step:
                raise DataError(
                    f"{path}: missing interval after {t0.isoformat()} in zone for {loc.name}"
                )
        if len(rows) < total:
            raise DataError(
                f"{path}: zone for {loc.name} has {len(rows)} rows, horizon needs {total}"
            )
        values = np.array([p for _, p in rows[:total]]) / 1000.0  # $/MWh -> $/kWh
        series[loc] = PriceSeries(loc, values)
    return PricePanel.from_series(series)


@dataclass(frozen=True)
class TravelTimeTable:
    """Travel durations in whole timesteps per ordered location pair.

    ``defaults`` holds the constant per-pair duration; ``by_departure``
    optionally refines it per departure step-of-day.  Lookups never
    return less than one step.
    """

    defaults: dict[tuple[Location, Location], int]
    by_departure: dict[tuple[Location, Location, int], int] = field(default_factory=dict)
    steps_per_day: int = 96

    def __post_init__(self) -> None:
        for key, v in {**self.defaults}.items():
            if v < 1:
                raise DataError(f"travel time for {key} must be at least one step")
        for key, v in self.by_departure.items():
            if v < 1:
                raise DataError(f"travel time for {key} must be at least one step")

    def steps(self, origin: Location, destination: Location, depart_step: int = 0) -> int:
        """Timesteps needed to travel origin -> destination when departing
        at absolute step ``depart_step``."""
        if origin == destination:
            return 0
        tod = depart_step % self.steps_per_day
        key = (origin, destination, tod)
        if key in self.by_departure:
            return self.by_departure[key]
        return self.defaults[(origin, destination)]

    def max_steps(self, origin: Location, destination: Location) -> int:
        if origin == destination:
            return 0
        per_dep = [
            v for (o, d, _), v in self.by_departure.items()
            if o == origin and d == destination
        ]
        return max([self.defaults[(origin, destination)], *per_dep])


def travel_steps_from_minutes(minutes: float, dt_hours: float) -> int:
    """Round a duration up to whole steps, with a one-step floor."""
    if minutes <= 0:
        raise DataError(f"non-positive travel duration: {minutes}")
    return max(1, math.ceil(minutes / (60.0 * dt_hours)))


def default_travel_table(config: FleetConfig, speed_mph: float = 60.0) -> TravelTimeTable:
    """Constant travel times derived from pair distances at ``speed_mph``."""
    dt = config.horizon.dt_hours
    defaults = {}
    for a in LOCATIONS:
        for b in LOCATIONS:
            if a == b:
                continue
            minutes = config.distances_mi[(a, b)] / speed_mph * 60.0
            defaults[(a, b)] = travel_steps_from_minutes(minutes, dt)
    return TravelTimeTable(defaults=defaults, steps_per_day=config.horizon.steps_per_day)


def load_travel_times(path, horizon: Horizon, config: FleetConfig,
                      location_names=None) -> TravelTimeTable:
    """Load an ``origin,destination,depart_hhmm,minutes`` traffic CSV.

    Minutes are rounded up to whole timesteps (never below one); pairs or
    departure times absent from the file fall back to constant defaults
    computed from pair distances at 60 mi/h.
    """
    table = default_travel_table(config)
    zone_of = _zone_map(location_names if location_names is not None else config)
    by_departure: dict[tuple[Location, Location, int], int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRAFFIC_HEADER:
            raise DataError(
                f"{path}: expected header {','.join(TRAFFIC_HEADER)!r}, got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            origin_text, dest_text, hhmm, minutes_text = (f.strip() for f in row)
            if origin_text not in zone_of or dest_text not in zone_of:
                raise DataError(f"{path}:{lineno}: unknown zone in {origin_text!r}->{dest_text!r}")
            origin, dest = zone_of[origin_text], zone_of[dest_text]
            if origin == dest:
                raise DataError(f"{path}:{lineno}: origin equals destination")
            try:
                minutes = float(minutes_text)
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric minutes {minutes_text!r}") from None
            if minutes <= 0:
                raise DataError(f"{path}:{lineno}: non-positive duration {minutes}")
            try:
                hh, mm = int(hhmm[:-2] or 0), int(hhmm[-2:])
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad depart_hhmm {hhmm!r}") from None
            minute_of_day = hh * 60 + mm
            tod_step = int(minute_of_day / (60.0 * horizon.dt_hours)) % horizon.steps_per_day
            by_departure[(origin, dest, tod_step)] = travel_steps_from_minutes(
                minutes, horizon.dt_hours
            )
    return TravelTimeTable(
        defaults=table.defaults,
        by_departure=by_departure,
        steps_per_day=horizon.steps_per_day,
    )
