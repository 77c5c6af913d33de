"""Figure rendering for scenario reports.

Renders the standard report views (fleet net power by location, vehicle
counts, trip matrix, cumulative fleet state of charge, forecast replay)
to PNG files next to the CSV output.  Uses the Agg backend so runs are
headless-safe.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .model import LOCATIONS
from .simulate import ForecastReplay, ScenarioReport

plt.rcParams.update(
    {
        "figure.figsize": (8.0, 4.5),
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "savefig.dpi": 120,
    }
)

_COLORS = {"A": "tab:green", "B": "tab:purple", "C": "tab:pink"}


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _hours(report: ScenarioReport):
    dt = report.schedule.dt_hours
    return [t * dt for t in range(report.schedule.n_steps)]


def render_report_figures(report: ScenarioReport, outdir, names=None) -> list[Path]:
    """Write the four standard figures for one scenario; returns paths."""
    base = Path(outdir) / report.scenario.value
    base.mkdir(parents=True, exist_ok=True)
    names = names or {loc: loc.name for loc in LOCATIONS}
    hours = _hours(report)
    written = []

    fig, ax = plt.subplots()
    for loc in LOCATIONS:
        ax.plot(hours, report.net_power_kw[:, int(loc)] / 1000.0,
                color=_COLORS[loc.name], label=names[loc])
    ax.set_xlabel("hour")
    ax.set_ylabel("fleet net charging (MW)")
    ax.set_title(f"{report.scenario.value}: net charging by location")
    ax.legend()
    path = base / "net_power.png"
    _save(fig, path)
    written.append(path)

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8.0, 6.0))
    for ax, loc in zip(axes, LOCATIONS):
        ax.step(hours, report.vehicle_counts[:, int(loc)], where="post",
                color=_COLORS[loc.name])
        ax.set_ylabel(names[loc])
    axes[-1].set_xlabel("hour")
    axes[0].set_title(f"{report.scenario.value}: vehicles per location")
    path = base / "vehicle_counts.png"
    _save(fig, path)
    written.append(path)

    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    im = ax.imshow(report.trip_matrix, cmap="Blues")
    ax.set_xticks(range(3), [names[loc] for loc in LOCATIONS])
    ax.set_yticks(range(3), [names[loc] for loc in LOCATIONS])
    ax.set_xlabel("destination")
    ax.set_ylabel("origin")
    for i in range(3):
        for j in range(3):
            ax.text(j, i, str(int(report.trip_matrix[i, j])),
                    ha="center", va="center", fontsize=11)
    ax.set_title(f"{report.scenario.value}: trips")
    fig.colorbar(im, ax=ax, shrink=0.8)
    path = base / "trips.png"
    _save(fig, path)
    written.append(path)

    fig, ax = plt.subplots()
    ax.plot(hours, report.fleet_soc_kwh / 1000.0, color="tab:blue")
    ax.set_xlabel("hour")
    ax.set_ylabel("fleet state of charge (MWh)")
    ax.set_title(f"{report.scenario.value}: cumulative fleet SOC")
    path = base / "soc.png"
    _save(fig, path)
    written.append(path)
    return written


def render_replay_figure(replay: ForecastReplay, outdir) -> Path:
    base = Path(outdir) / "forecast_replay"
    base.mkdir(parents=True, exist_ok=True)
    days = list(range(len(replay.day_planned)))
    width = 0.38
    fig, ax = plt.subplots()
    ax.bar([d - width / 2 for d in days], replay.day_planned, width,
           label="planned (forecast prices)", color="tab:blue")
    ax.bar([d + width / 2 for d in days], replay.day_settled, width,
           label="settled (actual prices)", color="tab:red")
    ax.set_xticks(days, [f"day {d}" for d in days])
    ax.set_ylabel("charging cost ($)")
    ax.set_title("forecast replay: planned vs settled cost")
    ax.legend()
    path = base / "replay.png"
    _save(fig, path)
    return path
