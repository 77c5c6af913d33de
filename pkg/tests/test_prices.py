from datetime import datetime, timedelta

import numpy as np
import pytest

from fleetarb.errors import DataError
from fleetarb.model import Horizon, Location
from fleetarb.prices import (
    PricePanel,
    ScenarioSet,
    TravelTimeTable,
    day_scenarios,
    default_travel_table,
    load_prices,
    load_travel_times,
    mean_panel,
    time_only_panel,
    travel_steps_from_minutes,
)
from fleetarb.synthetic import synthetic_price_pair, write_price_csv, write_traffic_csv

from helpers import flat_panel, tiny_config


def _write_price_file(path, horizon, mangle=None):
    start = datetime(2022, 1, 3)
    step = timedelta(hours=horizon.dt_hours)
    lines = ["timestamp,zone,price_per_mwh"]
    for t in range(horizon.total_steps):
        ts = (start + t * step).isoformat()
        for zone in ("San Antonio", "San Marcos", "Austin"):
            lines.append(f"{ts},{zone},50.0")
    if mangle:
        lines = mangle(lines)
    path.write_text("\n".join(lines) + "\n")


def test_load_prices_week(tmp_path):
    horizon = Horizon(steps_per_day=96, num_days=7)
    f = tmp_path / "p.csv"
    _write_price_file(f, horizon)
    panel = load_prices(f, horizon)
    assert panel.n_steps == 672
    # $50/MWh stored as $0.05/kWh
    assert np.allclose(panel.values, 0.05)


def test_load_prices_missing_interval(tmp_path):
    horizon = Horizon(steps_per_day=8, num_days=1)
    f = tmp_path / "p.csv"

    def drop_one(lines):
        # remove the San Marcos row at 01:00 (steps are 15 min)
        victim = "2022-01-03T01:00:00,San Marcos,50.0"
        assert victim in lines
        return [l for l in lines if l != victim]

    _write_price_file(f, horizon, mangle=drop_one)
    with pytest.raises(DataError, match="missing interval after 2022-01-03T00:45:00"):
        load_prices(f, horizon)


def test_load_prices_unknown_zone(tmp_path):
    horizon = Horizon(steps_per_day=8, num_days=1)
    f = tmp_path / "p.csv"
    _write_price_file(f, horizon, mangle=lambda ls: ls + ["2022-01-03T02:00:00,Dallas,50.0"])
    with pytest.raises(DataError, match="unknown zone 'Dallas'"):
        load_prices(f, horizon)


def test_load_prices_non_numeric(tmp_path):
    horizon = Horizon(steps_per_day=8, num_days=1)
    f = tmp_path / "p.csv"
    _write_price_file(
        f, horizon,
        mangle=lambda ls: [l.replace("T00:15:00,Austin,50.0", "T00:15:00,Austin,oops")
                           for l in ls],
    )
    with pytest.raises(DataError, match="non-numeric price"):
        load_prices(f, horizon)


def test_load_prices_short_file(tmp_path):
    horizon = Horizon(steps_per_day=96, num_days=1)
    f = tmp_path / "p.csv"
    _write_price_file(f, Horizon(steps_per_day=48, num_days=1))
    with pytest.raises(DataError, match="horizon needs 96"):
        load_prices(f, horizon)


def test_synthetic_csv_roundtrip(tmp_path):
    horizon = Horizon(steps_per_day=24, num_days=2)
    _, panel = synthetic_price_pair(11, horizon)
    f = tmp_path / "synth.csv"
    write_price_csv(panel, f, horizon)
    loaded = load_prices(f, horizon)
    assert np.allclose(loaded.values, panel.values, atol=1e-9)


def test_mean_panel_singleton_identity():
    p = flat_panel(8, 0.03)
    assert np.array_equal(mean_panel(ScenarioSet.single(p)).values, p.values)


def test_mean_panel_symmetry():
    p = PricePanel(np.random.default_rng(0).normal(0, 0.05, (3, 12)))
    neg = PricePanel(-p.values)
    m = mean_panel(ScenarioSet((p, neg)))
    assert np.allclose(m.values, 0.0)


def test_mean_panel_three_values():
    panels = [flat_panel(4, v) for v in (0.02, 0.04, 0.06)]
    m = mean_panel(ScenarioSet(tuple(panels)))
    assert np.allclose(m.values, 0.04)


def test_mean_panel_identical_panels_exact():
    p = PricePanel(np.random.default_rng(1).uniform(-0.1, 0.3, (3, 10)))
    m = mean_panel(ScenarioSet(tuple([p] * 7)))
    assert np.array_equal(m.values, p.values)


def test_time_only_uniform_unchanged():
    p = flat_panel(6, 0.03)
    assert np.array_equal(time_only_panel(p).values, p.values)


def test_time_only_mean_and_idempotent():
    values = np.zeros((3, 1))
    values[:, 0] = [0.00, 0.03, 0.06]
    collapsed = time_only_panel(PricePanel(values))
    assert np.allclose(collapsed.values, 0.03)
    again = time_only_panel(collapsed)
    assert np.array_equal(again.values, collapsed.values)
    # zero cross-location variance everywhere
    rng_panel = PricePanel(np.random.default_rng(2).normal(0.05, 0.02, (3, 40)))
    out = time_only_panel(rng_panel).values
    assert np.allclose(out.var(axis=0), 0.0)


def test_day_scenarios_slicing():
    horizon = Horizon(steps_per_day=4, num_days=2)
    long_panel = PricePanel(np.arange(3 * 20, dtype=float).reshape(3, 20))
    s = day_scenarios(long_panel, horizon)
    # 5 historical days, 2-day windows -> 4 scenarios
    assert s.k == 4
    assert np.array_equal(s.scenarios[1].values, long_panel.values[:, 4:12])


def test_travel_rounding():
    # 31 miles at 60 mi/h and 15-minute steps
    assert travel_steps_from_minutes(31.0, 0.25) == 3
    assert travel_steps_from_minutes(50.0, 0.25) == 4
    assert travel_steps_from_minutes(14.0, 0.25) == 1
    with pytest.raises(DataError):
        travel_steps_from_minutes(0.0, 0.25)


def test_default_travel_table_from_distances():
    config = tiny_config(steps_per_day=96)
    table = default_travel_table(config)
    assert table.steps(Location.A, Location.B) == 4   # 50 mi
    assert table.steps(Location.B, Location.C) == 3   # 31 mi
    assert table.steps(Location.A, Location.C) == 6   # 81 mi
    assert table.steps(Location.B, Location.A) == 4


def test_load_travel_times_departure_dependent(tmp_path):
    config = tiny_config(steps_per_day=96)
    f = tmp_path / "traffic.csv"
    f.write_text(
        "origin,destination,depart_hhmm,minutes\n"
        "San Antonio,San Marcos,0800,75.0\n"
        "San Antonio,San Marcos,1300,50.0\n"
    )
    table = load_travel_times(f, config.horizon, config)
    # 08:00 at 15-minute steps is step 32; 75 minutes -> 5 steps
    assert table.steps(Location.A, Location.B, 32) == 5
    assert table.steps(Location.A, Location.B, 52) == 4
    # other times fall back to the distance default
    assert table.steps(Location.A, Location.B, 0) == 4
    assert table.max_steps(Location.A, Location.B) == 5


def test_load_travel_times_rejects_nonpositive(tmp_path):
    config = tiny_config(steps_per_day=96)
    f = tmp_path / "traffic.csv"
    f.write_text("origin,destination,depart_hhmm,minutes\nAustin,San Marcos,0800,-3\n")
    with pytest.raises(DataError, match="non-positive duration"):
        load_travel_times(f, config.horizon, config)


def test_traffic_fixture_loads(tmp_path):
    config = tiny_config(steps_per_day=96)
    f = tmp_path / "traffic.csv"
    write_traffic_csv(f, config, seed=3)
    table = load_travel_times(f, config.horizon, config)
    for a in Location:
        for b in Location:
            if a != b:
                for t in range(0, 96, 7):
                    assert table.steps(a, b, t) >= 1


def test_table_lookups_always_at_least_one():
    table = TravelTimeTable(
        defaults={(a, b): 1 for a in Location for b in Location if a != b},
        steps_per_day=24,
    )
    for a in Location:
        for b in Location:
            if a != b:
                assert table.steps(a, b, 13) >= 1
    with pytest.raises(DataError):
        TravelTimeTable(defaults={(Location.A, Location.B): 0}, steps_per_day=24)


def test_scenario_set_requires_shared_horizon():
    with pytest.raises(DataError):
        ScenarioSet((flat_panel(8), flat_panel(9)))
    with pytest.raises(DataError):
        ScenarioSet(())


def test_panel_rejects_non_finite():
    values = np.full((3, 4), 0.05)
    values[1, 2] = np.nan
    with pytest.raises(DataError):
        PricePanel(values)
