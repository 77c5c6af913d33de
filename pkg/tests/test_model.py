import math

import numpy as np
import pytest

from fleetarb.errors import ConfigError
from fleetarb.model import (
    DEFAULT_DISTANCES_MI,
    LOCATIONS,
    ChargerSpec,
    DeliveryRequirement,
    FleetConfig,
    Horizon,
    Location,
    VehicleSpec,
    VisitWindow,
    parse_config,
    sample_fleet,
    serialize_config,
)
from fleetarb.synthetic import demo_fleet_config

MINIMAL_DOC = """
[horizon]
steps_per_day = 8
num_days = 1

[[vehicle]]
capacity_kwh = 700.0
e_init_kwh = 420.0
"""


def test_paper_parameter_document():
    config = demo_fleet_config(seed=7, n_vehicles=10, num_days=7)
    parsed = parse_config(serialize_config(config))
    assert parsed.n_vehicles == 10
    assert parsed.horizon.total_steps == 672
    assert parsed.charger.p_c_max_kw == 150.0
    assert parsed.delivery.min_visits[Location.B] == 6


def test_minimal_document():
    config = parse_config(MINIMAL_DOC)
    assert config.n_vehicles == 1
    assert config.horizon.total_steps == 8
    v = config.vehicles[0]
    assert v.e_final_kwh == v.e_init_kwh
    assert v.e_min_kwh == pytest.approx(70.0)
    assert v.home is Location.A


def test_init_energy_above_capacity_rejected():
    doc = MINIMAL_DOC.replace("e_init_kwh = 420.0", "e_init_kwh = 800.0")
    with pytest.raises(ConfigError, match="initial energy exceeds capacity"):
        parse_config(doc)


def test_syntax_error_reports_position():
    with pytest.raises(ConfigError, match="line"):
        parse_config("[horizon\nsteps_per_day = 8")


def test_unknown_location_rejected():
    doc = MINIMAL_DOC + 'home = "D"\n'
    with pytest.raises(ConfigError, match="unknown location"):
        parse_config(doc)


def test_duplicate_vehicle_ids_rejected():
    doc = MINIMAL_DOC + "id = 0\n\n[[vehicle]]\nid = 0\ncapacity_kwh = 700.0\ne_init_kwh = 400.0\n"
    with pytest.raises(ConfigError, match="unique"):
        parse_config(doc)


def test_min_visits_cannot_exceed_fleet():
    doc = MINIMAL_DOC + "\n[delivery]\nmin_visits = { B = 2 }\n"
    with pytest.raises(ConfigError, match="exceeds fleet size"):
        parse_config(doc)


def test_roundtrip_identity_on_sampled_fleet():
    config = FleetConfig(
        vehicles=tuple(sample_fleet(3, 4)),
        charger=ChargerSpec(120.0, 110.0),
        horizon=Horizon(steps_per_day=48, num_days=2, dt_hours=0.25),
        delivery=DeliveryRequirement(
            min_visits={Location.B: 2}, window=VisitWindow.WHOLE_HORIZON
        ),
    )
    assert parse_config(serialize_config(config)) == config


def test_distances_symmetric_with_defaults():
    config = parse_config(MINIMAL_DOC)
    for (a, b), d in DEFAULT_DISTANCES_MI.items():
        assert config.distances_mi[(a, b)] == d
        assert config.distances_mi[(b, a)] == d


def test_sample_fleet_ranges():
    fleet = sample_fleet(seed=1, n=10)
    assert len(fleet) == 10
    for v in fleet:
        assert 630.0 <= v.capacity_kwh <= 770.0
        assert 420.0 <= v.e_init_kwh <= 490.0
        assert 63.0 <= v.p_drive_kw <= 77.0
        roundtrip = v.eta_c * v.eta_d
        assert 0.90 <= roundtrip <= 1.00
        assert v.eta_c == pytest.approx(v.eta_d)
        assert v.eta_c == pytest.approx(math.sqrt(roundtrip))
        assert v.e_min_kwh == pytest.approx(0.10 * v.capacity_kwh)
        assert v.e_final_kwh == v.e_init_kwh


def test_sample_fleet_deterministic():
    assert sample_fleet(1, 10) == sample_fleet(1, 10)
    assert sample_fleet(1, 10) != sample_fleet(2, 10)


def test_sampled_specs_satisfy_invariants():
    for seed in range(20):
        for v in sample_fleet(seed, 5):
            assert v.e_min_kwh <= v.e_init_kwh <= v.capacity_kwh
            assert v.e_min_kwh <= v.e_final_kwh <= v.capacity_kwh
            assert 0 < v.eta_c <= 1 and 0 < v.eta_d <= 1


def test_horizon_validation():
    with pytest.raises(ConfigError):
        Horizon(steps_per_day=0)
    with pytest.raises(ConfigError):
        Horizon(dt_hours=0.0)
    assert Horizon(steps_per_day=96, num_days=7).total_steps == 672


def test_charger_must_be_positive():
    with pytest.raises(ConfigError):
        ChargerSpec(p_c_max_kw=0.0)


def test_vehicle_efficiency_bounds():
    with pytest.raises(ConfigError, match="eta_c"):
        VehicleSpec(id=0, capacity_kwh=700, e_init_kwh=400, eta_c=1.2)
