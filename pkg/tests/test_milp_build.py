import numpy as np
import pytest

from fleetarb.branchbound import oracle_solve, solve_milp
from fleetarb.errors import DataError, InfeasibleError
from fleetarb.milp import (
    CHARGE_KINDS,
    DISCHARGE_KINDS,
    IND_KINDS,
    Mode,
    StartCondition,
    VarKind,
    build,
    build_counterfactual,
    evaluate_cost,
)
from fleetarb.model import LOCATIONS, Location
from fleetarb.prices import PricePanel, ScenarioSet, mean_panel
from fleetarb.simulate import schedule_from_solution

from helpers import (
    analytic_instance,
    flat_panel,
    pin_home_visits,
    tiny_config,
    two_price_panel,
    uniform_travel,
)


def test_column_counts_tiny():
    cfg = tiny_config(steps_per_day=8)
    inst = build(cfg, ScenarioSet.single(flat_panel(8)), uniform_travel(1, 8))
    idx = inst.index
    ind_cols = [j for j in range(inst.n_cols)
                if idx.decode(j)[0] in (VarKind.IND_A, VarKind.IND_B, VarKind.IND_C)]
    power_cols = [j for j in range(inst.n_cols)
                  if idx.decode(j)[0] in (VarKind.CHARGE_A, VarKind.DISCHARGE_A,
                                          VarKind.CHARGE_B, VarKind.DISCHARGE_B,
                                          VarKind.CHARGE_C, VarKind.DISCHARGE_C)]
    soc_cols = [j for j in range(inst.n_cols) if idx.decode(j)[0] is VarKind.SOC]
    assert len(ind_cols) == 24
    assert all(inst.is_integer[j] for j in ind_cols)
    assert len(power_cols) == 48
    assert len(soc_cols) == 8


def test_travel_exclusion_row_count():
    cfg = tiny_config(steps_per_day=8)
    inst = build(cfg, ScenarioSet.single(flat_panel(8)), uniform_travel(1, 8))
    travel_rows = [n for n in inst.row_names if n.startswith("trv_")]
    # six ordered pairs, tau=1, t = 0..6
    assert len(travel_rows) == 42


def test_stationary_mode_has_no_free_binaries():
    cfg = tiny_config(n_vehicles=2, steps_per_day=8)
    inst = build(cfg, ScenarioSet.single(flat_panel(8)), uniform_travel(1, 8),
                 Mode.STATIONARY)
    assert inst.free_binary_cols().size == 0
    assert inst.integer_cols().size > 0
    sol = solve_milp(inst)
    assert sol.status == "optimal"
    assert sol.nodes == 1


def test_delivery_pigeonhole_rejected():
    cfg = tiny_config(n_vehicles=1, steps_per_day=8, min_visits={Location.B: 1})
    bad = {Location.A: 2}  # exceeds the single-vehicle fleet
    with pytest.raises(Exception):
        tiny_config(n_vehicles=1, min_visits=bad)
    # the builder's own check triggers on a config carrying a bigger fleet
    cfg10 = tiny_config(n_vehicles=10, steps_per_day=8)
    object.__setattr__(cfg10.delivery, "min_visits",
                       {Location.A: 11, Location.B: 0, Location.C: 0})
    with pytest.raises(InfeasibleError, match="11 vehicles"):
        build(cfg10, ScenarioSet.single(flat_panel(8)), uniform_travel(1, 8))


def test_counterfactual_rows_identical_objective_differs():
    cfg = tiny_config(steps_per_day=6)
    values = np.zeros((3, 6))
    values[0] = 0.00
    values[1] = 0.03
    values[2] = 0.06
    panel = PricePanel(values)
    scen = ScenarioSet.single(panel)
    travel = uniform_travel(1, 6)
    spatial = build(cfg, scen, travel)
    counter = build_counterfactual(cfg, scen, travel)
    assert spatial.row_names == counter.row_names
    assert np.array_equal(spatial.rhs, counter.rhs)
    assert np.array_equal(spatial.senses, counter.senses)
    assert (spatial.a != counter.a).nnz == 0
    # collapsed price is the 0.03 mean; every power column carries 0.03*dt
    dt = cfg.horizon.dt_hours
    for loc in LOCATIONS:
        for t in range(6):
            c = counter.index.col(CHARGE_KINDS[loc], 0, t)
            d = counter.index.col(DISCHARGE_KINDS[loc], 0, t)
            assert counter.obj[c] == pytest.approx(0.03 * dt)
            assert counter.obj[d] == pytest.approx(-0.03 * dt)


def test_counterfactual_equals_spatial_when_prices_uniform():
    cfg = tiny_config(steps_per_day=6)
    panel = flat_panel(6, 0.04)
    scen = ScenarioSet.single(panel)
    travel = uniform_travel(1, 6)
    assert np.array_equal(
        build(cfg, scen, travel).obj, build_counterfactual(cfg, scen, travel).obj
    )


def test_scenario_reduction_equivalence():
    cfg = tiny_config(steps_per_day=6)
    rng = np.random.default_rng(9)
    panels = tuple(PricePanel(rng.uniform(0.01, 0.2, (3, 6))) for _ in range(5))
    scen = ScenarioSet(panels)
    travel = uniform_travel(1, 6)
    from_set = build(cfg, scen, travel)
    from_mean = build(cfg, ScenarioSet.single(mean_panel(scen)), travel)
    assert from_set.canonical_bytes() == from_mean.canonical_bytes()


def test_soc_and_fixing_bounds():
    cfg = tiny_config(steps_per_day=8, num_days=1)
    inst = build(cfg, ScenarioSet.single(flat_panel(8)), uniform_travel(1, 8))
    idx = inst.index
    v = cfg.vehicles[0]
    for t in range(8):
        j = idx.col(VarKind.SOC, 0, t)
        if t == 7:
            assert inst.lower[j] == inst.upper[j] == v.e_final_kwh
        else:
            assert inst.lower[j] == v.e_min_kwh
            assert inst.upper[j] == v.capacity_kwh
    start = idx.col(IND_KINDS[v.home], 0, 0)
    assert inst.lower[start] == inst.upper[start] == 1.0
    back = idx.col(IND_KINDS[v.home], 0, 7)
    assert inst.lower[back] == inst.upper[back] == 1.0


def test_departure_start_blocks_early_arrivals():
    cfg = tiny_config(steps_per_day=8)
    inst = build(cfg, ScenarioSet.single(flat_panel(8)), uniform_travel(3, 8),
                 start=StartCondition.DEPARTURE, step_offset=8)
    idx = inst.index
    for loc in (Location.B, Location.C):
        for s in range(3):
            j = idx.col(IND_KINDS[loc], 0, s)
            assert inst.upper[j] == 0.0
        assert inst.upper[idx.col(IND_KINDS[loc], 0, 3)] == 1.0
    # no presence row pin at step 0 in departure mode
    j = idx.col(IND_KINDS[Location.A], 0, 0)
    assert inst.lower[j] == 0.0


def test_evaluate_cost_zero_and_single_step():
    cfg, travel, panel, inst = analytic_instance()

    class Zero:
        charge_kw = np.zeros((1, 8, 3))
        discharge_kw = np.zeros((1, 8, 3))
        dt_hours = 0.25

    assert evaluate_cost(Zero(), panel) == 0.0

    class OneCharge:
        charge_kw = np.zeros((1, 8, 3))
        discharge_kw = np.zeros((1, 8, 3))
        dt_hours = 0.25

    sched = OneCharge()
    sched.charge_kw[0, 0, 0] = 150.0
    flat = flat_panel(8, 0.04)
    assert evaluate_cost(sched, flat) == pytest.approx(1.50)


def test_evaluate_cost_matches_solver_objective():
    cfg, travel, panel, inst = analytic_instance()
    sol = solve_milp(inst)
    schedule = schedule_from_solution(inst, sol, cfg)
    assert evaluate_cost(schedule, panel) == pytest.approx(sol.objective, abs=1e-6)


def test_evaluate_cost_dimension_mismatch():
    _, _, panel, _ = analytic_instance()

    class Bad:
        charge_kw = np.zeros((1, 5, 3))
        discharge_kw = np.zeros((1, 5, 3))
        dt_hours = 0.25

    with pytest.raises(DataError):
        evaluate_cost(Bad(), panel)


def test_gating_soundness_on_solution():
    cfg, travel, panel, inst = analytic_instance()
    sol = solve_milp(inst)
    sched = schedule_from_solution(inst, sol, cfg)
    flows = sched.charge_kw + sched.discharge_kw
    active = flows > 1e-6
    assert np.all(sched.indicators[active.nonzero()[0], active.nonzero()[1],
                                   active.nonzero()[2]] == 1)


def test_energy_conservation_unit_efficiency():
    # eta = 1 and e_final = e_init: grid charge equals grid discharge plus
    # driving energy, telescoping the recursion over the day.
    cfg = tiny_config(steps_per_day=10, eta=1.0, p_drive=50.0,
                      min_visits={Location.B: 1})
    panel = two_price_panel(10, cheap=0.01, dear=0.09, split=5, away=0.05)
    inst = build(cfg, ScenarioSet.single(panel), uniform_travel(1, 10))
    sol = solve_milp(pin_home_visits(inst, cfg))
    assert sol.status == "optimal"
    sched = schedule_from_solution(inst, sol, cfg)
    dt = 0.25
    charged = sched.charge_kw.sum() * dt
    discharged = sched.discharge_kw.sum() * dt
    driving_kwh = (sched.driving_mask().sum() * 50.0) * dt
    assert charged == pytest.approx(discharged + driving_kwh, abs=1e-6)


def test_dimension_mismatch_rejected():
    cfg = tiny_config(steps_per_day=8)
    with pytest.raises(DataError, match="horizon"):
        build(cfg, ScenarioSet.single(flat_panel(9)), uniform_travel(1, 8))


def test_instance_names_follow_scheme():
    cfg = tiny_config(steps_per_day=6, num_days=1)
    inst = build(cfg, ScenarioSet.single(flat_panel(6)), uniform_travel(1, 6))
    names = inst.col_names()
    idx = inst.index
    assert names[idx.col(VarKind.CHARGE_A, 0, 0)] == "c_A_n0_t0"
    assert names[idx.col(VarKind.IND_B, 0, 3)] == "ind_B_n0_t3"
    assert names[idx.col(VarKind.SOC, 0, 5)] == "soc_n0_t5"
    assert names[idx.col(VarKind.VISIT_C, 0, 0)] == "visit_C_n0_d0"
