"""Shared fixtures: tiny configs, price ramps, and randomized instances."""

from __future__ import annotations

import numpy as np

from fleetarb.milp import VISIT_KINDS, Mode, build
from fleetarb.model import (
    LOCATIONS,
    ChargerSpec,
    DeliveryRequirement,
    FleetConfig,
    Horizon,
    Location,
    VehicleSpec,
)
from fleetarb.prices import PricePanel, ScenarioSet, TravelTimeTable


def uniform_travel(steps: int, steps_per_day: int) -> TravelTimeTable:
    return TravelTimeTable(
        defaults={(a, b): steps for a in LOCATIONS for b in LOCATIONS if a != b},
        steps_per_day=steps_per_day,
    )


def tiny_config(
    n_vehicles: int = 1,
    steps_per_day: int = 8,
    num_days: int = 1,
    eta: float = 1.0,
    p_drive: float = 70.0,
    min_visits: dict | None = None,
    e_init: float = 420.0,
    capacity: float = 700.0,
    home: Location = Location.A,
) -> FleetConfig:
    vehicles = tuple(
        VehicleSpec(
            id=i,
            capacity_kwh=capacity,
            e_init_kwh=e_init,
            e_min_kwh=70.0,
            eta_c=eta,
            eta_d=eta,
            p_drive_kw=p_drive,
            home=home,
        )
        for i in range(n_vehicles)
    )
    return FleetConfig(
        vehicles=vehicles,
        charger=ChargerSpec(150.0, 150.0),
        horizon=Horizon(steps_per_day=steps_per_day, num_days=num_days, dt_hours=0.25),
        delivery=DeliveryRequirement(min_visits=min_visits or {}),
    )


def flat_panel(steps: int, price: float = 0.05) -> PricePanel:
    return PricePanel(np.full((3, steps), price))


def two_price_panel(steps: int, cheap: float = 0.02, dear: float = 0.10,
                    split: int | None = None, away: float = 0.06) -> PricePanel:
    """Home location is cheap then dear; away locations flat."""
    split = steps // 2 if split is None else split
    values = np.full((3, steps), away)
    values[0, :split] = cheap
    values[0, split:] = dear
    return PricePanel(values)


def analytic_instance():
    """The 8-step charge-then-discharge arbitrage instance with a known
    optimum of -12.00."""
    cfg = tiny_config(steps_per_day=8, eta=1.0)
    travel = TravelTimeTable(
        defaults={
            (Location.A, Location.B): 4, (Location.B, Location.A): 4,
            (Location.A, Location.C): 6, (Location.C, Location.A): 6,
            (Location.B, Location.C): 3, (Location.C, Location.B): 3,
        },
        steps_per_day=8,
    )
    panel = two_price_panel(8, cheap=0.02, dear=0.10, split=4, away=0.06)
    inst = build(cfg, ScenarioSet.single(panel), travel, Mode.SPATIAL)
    return cfg, travel, panel, inst


from fleetarb.milp import pin_home_visits  # noqa: E402  (shared helper)


def random_tiny_instance(seed: int, max_free: int = 20):
    """A randomized 1-2 vehicle, 6-10 step instance with at most
    ``max_free`` free binaries (extra indicator columns are pinned to
    zero at random)."""
    rng = np.random.default_rng(seed)
    n = 1 if rng.random() < 0.7 else 2
    steps = int(rng.integers(6, 11)) if n == 1 else 6
    eta = 1.0 if rng.random() < 0.5 else float(np.sqrt(rng.uniform(0.9, 1.0)))
    vehicles = tuple(
        VehicleSpec(
            id=i,
            capacity_kwh=float(rng.uniform(600, 800)),
            e_init_kwh=float(rng.uniform(400, 500)),
            e_min_kwh=60.0,
            eta_c=eta,
            eta_d=eta,
            p_drive_kw=float(rng.uniform(60, 80)),
            home=Location(int(rng.integers(0, 3))),
        )
        for i in range(n)
    )
    deliveries = [{}, {Location.B: 1}, {Location.C: 1}][int(rng.integers(0, 3))]
    cfg = FleetConfig(
        vehicles=vehicles,
        charger=ChargerSpec(150.0, 150.0),
        horizon=Horizon(steps_per_day=steps, num_days=1, dt_hours=0.25),
        delivery=DeliveryRequirement(min_visits=deliveries),
    )
    pair_steps = {}
    for a in LOCATIONS:
        for b in LOCATIONS:
            if a != b and (b, a) not in pair_steps:
                pair_steps[(a, b)] = int(rng.integers(1, 3))
    pair_steps.update({(b, a): v for (a, b), v in list(pair_steps.items())})
    travel = TravelTimeTable(defaults=pair_steps, steps_per_day=steps)
    prices = rng.uniform(-0.02, 0.12, size=(3, steps)).round(4)
    inst = build(cfg, ScenarioSet.single(PricePanel(prices)), travel, Mode.SPATIAL)

    lo, up = inst.lower.copy(), inst.upper.copy()
    for vi, v in enumerate(vehicles):
        col = inst.index.col(VISIT_KINDS[v.home], vi, 0)
        lo[col] = up[col] = 1.0
    free = np.flatnonzero(inst.is_integer & (up - lo > 0.5))
    if free.size > max_free:
        drop = rng.choice(free, size=free.size - max_free, replace=False)
        lo[drop] = up[drop] = 0.0
    return cfg, travel, inst.with_bounds(lo, up)


def assert_lp_optimal(instance, sol, tol: float = 1e-7) -> None:
    """Certify an LP solution by its KKT conditions: primal feasibility,
    sign-correct reduced costs, and agreement at the bounds."""
    assert sol.status == "optimal"
    x = sol.x
    scale = max(1.0, float(np.abs(instance.rhs).max(initial=0.0)))
    assert np.all(x >= instance.lower - tol * scale)
    assert np.all(x <= instance.upper + tol * scale)
    ax = instance.a @ x
    for i in range(instance.n_rows):
        if instance.senses[i] == "L":
            assert ax[i] <= instance.rhs[i] + tol * scale
        elif instance.senses[i] == "G":
            assert ax[i] >= instance.rhs[i] - tol * scale
        else:
            assert abs(ax[i] - instance.rhs[i]) <= tol * scale
    # Reduced costs: at-lower columns need d >= 0, at-upper d <= 0,
    # interior columns d ~ 0.
    d = instance.obj - instance.a.T @ sol.duals
    cscale = max(1.0, float(np.abs(instance.obj).max(initial=0.0)))
    at_lower = x <= instance.lower + 1e-6
    at_upper = x >= instance.upper - 1e-6
    interior = ~(at_lower | at_upper)
    assert np.all(d[at_lower & ~at_upper] >= -tol * cscale * 100)
    assert np.all(d[at_upper & ~at_lower] <= tol * cscale * 100)
    assert np.all(np.abs(d[interior]) <= tol * cscale * 100)
