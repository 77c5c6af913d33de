"""Report serialization: one JSON document per scenario plus flat,
plot-ready CSVs.

Output is byte-deterministic for a fixed run: floats use a fixed format,
JSON keys are sorted, and nothing derives from wall-clock time.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import LOCATIONS, Location
from .simulate import FleetSchedule, ForecastReplay, Metrics, ScenarioReport

_F = "{:.10g}".format


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_schedule_csv(schedule: FleetSchedule, path) -> None:
    rows = []
    for vi in range(schedule.n_vehicles):
        for t in range(schedule.n_steps):
            ind = schedule.indicators[vi, t]
            where = LOCATIONS[int(ind.argmax())].name if ind.sum() == 1 else "transit"
            rows.append(
                [vi, t, where]
                + [_F(schedule.charge_kw[vi, t, int(l)]) for l in LOCATIONS]
                + [_F(schedule.discharge_kw[vi, t, int(l)]) for l in LOCATIONS]
                + [_F(schedule.soc_kwh[vi, t])]
            )
    _write_csv(
        Path(path),
        ["vehicle", "step", "location",
         "c_A_kw", "c_B_kw", "c_C_kw", "d_A_kw", "d_B_kw", "d_C_kw", "soc_kwh"],
        rows,
    )


def read_schedule_csv(path, dt_hours: float, steps_per_day: int) -> FleetSchedule:
    """Rebuild a schedule from its CSV form (parameters are not stored in
    the file and must be supplied)."""
    by_vehicle: dict[int, dict[int, list]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            vi, t = int(row["vehicle"]), int(row["step"])
            by_vehicle.setdefault(vi, {})[t] = row
    if not by_vehicle:
        raise DataError(f"{path}: empty schedule file")
    n = max(by_vehicle) + 1
    t_total = max(max(steps) for steps in by_vehicle.values()) + 1
    indicators = np.zeros((n, t_total, 3), dtype=np.int8)
    charge = np.zeros((n, t_total, 3))
    discharge = np.zeros((n, t_total, 3))
    soc = np.zeros((n, t_total))
    for vi, steps in by_vehicle.items():
        for t, row in steps.items():
            if row["location"] != "transit":
                indicators[vi, t, int(Location[row["location"]])] = 1
            for loc in LOCATIONS:
                charge[vi, t, int(loc)] = float(row[f"c_{loc.name}_kw"])
                discharge[vi, t, int(loc)] = float(row[f"d_{loc.name}_kw"])
            soc[vi, t] = float(row["soc_kwh"])
    return FleetSchedule(
        indicators=indicators, charge_kw=charge, discharge_kw=discharge,
        soc_kwh=soc, dt_hours=dt_hours, steps_per_day=steps_per_day,
    )


def _metrics_dict(m: Metrics) -> dict:
    return {
        "cost_usd": m.cost_usd,
        "distance_mi": m.distance_mi,
        "throughput_kwh": m.throughput_kwh,
    }


def write_report(report: ScenarioReport, outdir) -> Path:
    """Write one scenario's JSON report and CSV series under
    ``outdir/<scenario>/``; returns that directory."""
    base = Path(outdir) / report.scenario.value
    base.mkdir(parents=True, exist_ok=True)

    doc = {
        "scenario": report.scenario.value,
        "notes": list(report.notes),
        "totals": _metrics_dict(report.totals),
        "days": [_metrics_dict(m) for m in report.day_metrics],
        "trip_matrix": {
            f"{a.name}->{b.name}": int(report.trip_matrix[int(a), int(b)])
            for a in LOCATIONS for b in LOCATIONS if a != b
        },
        "solver_gaps": report.solver_gaps,
        "hit_limit": report.hit_limit,
    }
    with open(base / "report.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    _write_csv(
        base / "net_power.csv",
        ["step", "location", "net_kw"],
        (
            [t, loc.name, _F(report.net_power_kw[t, int(loc)])]
            for t in range(report.net_power_kw.shape[0])
            for loc in LOCATIONS
        ),
    )
    _write_csv(
        base / "vehicle_counts.csv",
        ["step", "location", "vehicles"],
        (
            [t, loc.name, int(report.vehicle_counts[t, int(loc)])]
            for t in range(report.vehicle_counts.shape[0])
            for loc in LOCATIONS
        ),
    )
    _write_csv(
        base / "soc.csv",
        ["step", "fleet_soc_kwh"],
        ([t, _F(v)] for t, v in enumerate(report.fleet_soc_kwh)),
    )
    _write_csv(
        base / "trips.csv",
        ["origin", "destination", "count"],
        (
            [a.name, b.name, int(report.trip_matrix[int(a), int(b)])]
            for a in LOCATIONS for b in LOCATIONS if a != b
        ),
    )
    _write_csv(
        base / "metrics.csv",
        ["scope", "cost_usd", "distance_mi", "throughput_kwh"],
        [
            [f"day{d}", _F(m.cost_usd), _F(m.distance_mi), _F(m.throughput_kwh)]
            for d, m in enumerate(report.day_metrics)
        ]
        + [["total", _F(report.totals.cost_usd), _F(report.totals.distance_mi),
            _F(report.totals.throughput_kwh)]],
    )
    write_schedule_csv(report.schedule, base / "schedule.csv")
    return base


def write_replay_report(replay: ForecastReplay, outdir) -> Path:
    base = Path(outdir) / "forecast_replay"
    base.mkdir(parents=True, exist_ok=True)
    doc = {
        "planned_cost_usd": replay.planned_cost_usd,
        "settled_cost_usd": replay.settled_cost_usd,
        "delta_usd": replay.delta_usd,
        "day_planned": replay.day_planned,
        "day_settled": replay.day_settled,
        "day_deltas": replay.day_deltas,
        "hit_limit": replay.hit_limit,
    }
    with open(base / "replay.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_csv(
        base / "replay.csv",
        ["day", "planned_usd", "settled_usd", "delta_usd"],
        (
            [d, _F(p), _F(s), _F(s - p)]
            for d, (p, s) in enumerate(zip(replay.day_planned, replay.day_settled))
        ),
    )
    write_schedule_csv(replay.schedule, base / "schedule.csv")
    return base


def summary_table(reports: list[ScenarioReport]) -> str:
    """Fixed-width cost/distance/throughput summary, one scenario per row."""
    header = (
        f"{'scenario':<16} {'cost_usd':>12} {'distance_mi':>12} {'throughput_kwh':>15}"
    )
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(
            f"{r.scenario.value:<16} {r.totals.cost_usd:>12.2f} "
            f"{r.totals.distance_mi:>12.1f} {r.totals.throughput_kwh:>15.1f}"
        )
    return "\n".join(lines)
