"""Bundled synthetic data: price fixtures and traffic tables.

Acceptance and demo runs need realistic inputs without redistributing
market data, so prices are generated from a seeded daily shape with a
controllable cross-location spread and spike schedule.  The day-ahead
variant is the smooth shape without noise or spikes, mirroring how
forecasts track the level but miss extremes.
"""

from __future__ import annotations

import csv
from datetime import datetime, timedelta

import numpy as np

from .model import DEFAULT_LOCATION_NAMES, LOCATIONS, FleetConfig, Horizon
from .prices import PricePanel

FIXTURE_START = datetime(2022, 1, 3, 0, 0)  # a Monday


def _daily_shape(horizon: Horizon, base: float, spread: float) -> np.ndarray:
    """Deterministic (3, T) level: a diurnal curve plus per-location
    phase-shifted spread so the cheap site rotates through the day."""
    t = np.arange(horizon.total_steps)
    frac = (t % horizon.steps_per_day) / horizon.steps_per_day
    diurnal = base * (1.0 + 0.6 * np.sin(2.0 * np.pi * (frac - 0.3)))
    panel = np.empty((3, horizon.total_steps))
    for k in range(3):
        phase = k / 3.0
        panel[k] = diurnal + 0.5 * spread * np.sin(2.0 * np.pi * (frac - phase))
    return panel


def synthetic_price_pair(
    seed: int,
    horizon: Horizon,
    base: float = 0.04,
    spread: float = 0.02,
    noise: float = 0.002,
    spikes_per_day: int = 1,
    spike_mag: float = 0.25,
) -> tuple[PricePanel, PricePanel]:
    """(day_ahead, real_time) panels in $/kWh.

    Real-time adds seeded noise and price spikes on top of the day-ahead
    shape; ``spread`` controls the cross-location price difference.
    """
    shape = _daily_shape(horizon, base, spread)
    day_ahead = PricePanel(shape)
    rng = np.random.default_rng(seed)
    rt = shape + rng.normal(0.0, noise, size=shape.shape)
    spd = horizon.steps_per_day
    for day in range(horizon.num_days):
        for _ in range(spikes_per_day):
            loc = int(rng.integers(0, 3))
            start = int(rng.integers(day * spd, (day + 1) * spd))
            width = int(rng.integers(1, 4))
            mag = spike_mag * rng.uniform(0.5, 1.5)
            stop = min(start + width, horizon.total_steps)
            rt[loc, start:stop] += mag
    return day_ahead, PricePanel(rt)


def synthetic_price_panel(seed: int, horizon: Horizon, **kwargs) -> PricePanel:
    """The real-time panel from :func:`synthetic_price_pair`."""
    return synthetic_price_pair(seed, horizon, **kwargs)[1]


def write_price_csv(panel: PricePanel, path, horizon: Horizon,
                    location_names=None, start: datetime = FIXTURE_START) -> None:
    """Write a panel in the loader's ``timestamp,zone,price_per_mwh``
    format ($/kWh values are scaled back to $/MWh)."""
    names = location_names or DEFAULT_LOCATION_NAMES
    step = timedelta(hours=horizon.dt_hours)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "zone", "price_per_mwh"])
        for t in range(panel.n_steps):
            ts = (start + t * step).isoformat()
            for loc in LOCATIONS:
                writer.writerow(
                    [ts, names[loc], f"{panel.values[int(loc), t] * 1000.0:.6f}"]
                )


def write_traffic_csv(path, config: FleetConfig, seed: int = 0,
                      rush_factor: float = 1.3) -> None:
    """Typical travel minutes per ordered pair and hour of day, with a
    deterministic rush-hour bump around 08:00 and 17:00."""
    rng = np.random.default_rng(seed)
    names = config.location_names
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["origin", "destination", "depart_hhmm", "minutes"])
        for a in LOCATIONS:
            for b in LOCATIONS:
                if a == b:
                    continue
                base_minutes = config.distances_mi[(a, b)]  # 60 mi/h baseline
                for hh in range(24):
                    rush = 1.0 + (rush_factor - 1.0) * (
                        np.exp(-0.5 * ((hh - 8) / 1.5) ** 2)
                        + np.exp(-0.5 * ((hh - 17) / 1.5) ** 2)
                    )
                    minutes = base_minutes * rush * rng.uniform(0.97, 1.03)
                    writer.writerow(
                        [names[a], names[b], f"{hh:02d}00", f"{minutes:.1f}"]
                    )


def demo_fleet_config(seed: int = 7, n_vehicles: int = 10, num_days: int = 7,
                      steps_per_day: int = 96, min_visits: int = 6) -> FleetConfig:
    """A ready-to-run configuration with a sampled fleet."""
    from .model import ChargerSpec, DeliveryRequirement, Location, sample_fleet

    return FleetConfig(
        vehicles=tuple(sample_fleet(seed, n_vehicles)),
        charger=ChargerSpec(),
        horizon=Horizon(steps_per_day=steps_per_day, num_days=num_days),
        delivery=DeliveryRequirement(
            min_visits={loc: min_visits for loc in LOCATIONS}
        ),
    )
