"""Domain types and configuration handling for electric truck fleets.

A problem instance couples a fixed set of three priced sites with a
discrete time horizon, a homogeneous bidirectional charger rating,
per-truck battery parameters, and minimum-visit delivery requirements.
All types are immutable after construction and safe to share between
threads; parsing is reentrant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import tomli

from .errors import ConfigError


class Location(enum.IntEnum):
    """One of the three fixed sites a truck can occupy."""

    A = 0
    B = 1
    C = 2


LOCATIONS = (Location.A, Location.B, Location.C)

DEFAULT_LOCATION_NAMES = {
    Location.A: "San Antonio",
    Location.B: "San Marcos",
    Location.C: "Austin",
}

# Road miles between sites: the two short legs plus their sum for the
# long pair.  Overridable via the [distances] config table.
DEFAULT_DISTANCES_MI = {
    (Location.A, Location.B): 50.0,
    (Location.B, Location.C): 31.0,
    (Location.A, Location.C): 81.0,
}

# Case-study sampling ranges for randomized fleets.
CAPACITY_RANGE_KWH = (630.0, 770.0)
ROUNDTRIP_EFF_RANGE = (0.90, 1.00)
E_INIT_RANGE_KWH = (420.0, 490.0)
P_DRIVE_RANGE_KW = (63.0, 77.0)
E_MIN_FRACTION = 0.10


class VisitWindow(enum.Enum):
    """Window over which minimum-visit delivery counts are enforced."""

    PER_DAY = "per_day"
    WHOLE_HORIZON = "whole_horizon"


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class Horizon:
    """Discrete planning horizon: ``num_days`` days of ``steps_per_day``
    slots, each ``dt_hours`` long."""

    steps_per_day: int = 96
    num_days: int = 1
    dt_hours: float = 0.25

    def __post_init__(self) -> None:
        _check(self.steps_per_day >= 1, "steps_per_day must be a positive integer")
        _check(self.num_days >= 1, "num_days must be a positive integer")
        _check(self.dt_hours > 0, "dt_hours must be positive")

    @property
    def total_steps(self) -> int:
        return self.steps_per_day * self.num_days

    def day_slice(self, day: int) -> slice:
        """Half-open step range covered by 0-based ``day``."""
        s = self.steps_per_day
        return slice(day * s, (day + 1) * s)


@dataclass(frozen=True)
class VehicleSpec:
    """Physical parameters of a single truck.

    Energies are kWh, powers kW.  ``eta_c`` and ``eta_d`` are the
    charge/discharge transfer efficiencies; ``p_drive_kw`` is the battery
    draw while the truck is on the road.
    """

    id: int
    capacity_kwh: float
    e_init_kwh: float
    e_min_kwh: float = None  # type: ignore[assignment]  # defaulted in __post_init__
    e_final_kwh: float = None  # type: ignore[assignment]
    eta_c: float = 1.0
    eta_d: float = 1.0
    p_drive_kw: float = 70.0
    home: Location = Location.A

    def __post_init__(self) -> None:
        if self.e_min_kwh is None:
            object.__setattr__(self, "e_min_kwh", E_MIN_FRACTION * self.capacity_kwh)
        if self.e_final_kwh is None:
            object.__setattr__(self, "e_final_kwh", self.e_init_kwh)
        _check(self.capacity_kwh > 0, f"vehicle {self.id}: capacity must be positive")
        _check(
            self.e_init_kwh <= self.capacity_kwh,
            f"vehicle {self.id}: initial energy exceeds capacity",
        )
        _check(
            self.e_min_kwh <= self.e_init_kwh,
            f"vehicle {self.id}: initial energy below minimum energy",
        )
        _check(
            self.e_final_kwh <= self.capacity_kwh,
            f"vehicle {self.id}: final energy exceeds capacity",
        )
        _check(
            self.e_min_kwh <= self.e_final_kwh,
            f"vehicle {self.id}: final energy below minimum energy",
        )
        _check(0 < self.eta_c <= 1, f"vehicle {self.id}: eta_c must be in (0, 1]")
        _check(0 < self.eta_d <= 1, f"vehicle {self.id}: eta_d must be in (0, 1]")
        _check(self.p_drive_kw >= 0, f"vehicle {self.id}: p_drive_kw must be nonnegative")


@dataclass(frozen=True)
class ChargerSpec:
    """Per-site bidirectional charger rating, kW."""

    p_c_max_kw: float = 150.0
    p_d_max_kw: float = 150.0

    def __post_init__(self) -> None:
        _check(self.p_c_max_kw > 0, "charger p_c_max_kw must be strictly positive")
        _check(self.p_d_max_kw > 0, "charger p_d_max_kw must be strictly positive")


@dataclass(frozen=True)
class DeliveryRequirement:
    """Minimum number of distinct visiting vehicles per location."""

    min_visits: dict[Location, int] = field(
        default_factory=lambda: {loc: 0 for loc in LOCATIONS}
    )
    window: VisitWindow = VisitWindow.PER_DAY

    def __post_init__(self) -> None:
        visits = {loc: int(self.min_visits.get(loc, 0)) for loc in LOCATIONS}
        for loc, v in visits.items():
            _check(v >= 0, f"min_visits[{loc.name}] must be nonnegative")
        object.__setattr__(self, "min_visits", visits)


@dataclass(frozen=True)
class FleetConfig:
    """A complete, validated problem instance."""

    vehicles: tuple[VehicleSpec, ...]
    charger: ChargerSpec = ChargerSpec()
    horizon: Horizon = Horizon()
    delivery: DeliveryRequirement = DeliveryRequirement()
    distances_mi: dict[tuple[Location, Location], float] = field(
        default_factory=lambda: dict(DEFAULT_DISTANCES_MI)
    )
    location_names: dict[Location, str] = field(
        default_factory=lambda: dict(DEFAULT_LOCATION_NAMES)
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        _check(len(self.vehicles) >= 1, "fleet must contain at least one vehicle")
        ids = [v.id for v in self.vehicles]
        _check(len(set(ids)) == len(ids), "vehicle ids must be unique")
        # Symmetrize distances; reject nonpositive or contradictory entries.
        dist: dict[tuple[Location, Location], float] = {}
        for (a, b), d in self.distances_mi.items():
            _check(a != b, "distance entries must name two distinct locations")
            _check(d > 0, f"distance {a.name}-{b.name} must be positive")
            for key in ((a, b), (b, a)):
                if key in dist and not math.isclose(dist[key], float(d)):
                    raise ConfigError(
                        f"distance {a.name}-{b.name} specified twice with different values"
                    )
                dist[key] = float(d)
        for a, b in DEFAULT_DISTANCES_MI:
            if (a, b) not in dist:
                dist[(a, b)] = dist[(b, a)] = DEFAULT_DISTANCES_MI[(a, b)]
        object.__setattr__(self, "distances_mi", dist)
        names = dict(DEFAULT_LOCATION_NAMES)
        names.update(self.location_names)
        object.__setattr__(self, "location_names", names)
        for loc, need in self.delivery.min_visits.items():
            _check(
                need <= len(self.vehicles),
                f"min_visits[{loc.name}]={need} exceeds fleet size {len(self.vehicles)}",
            )

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicles)

    def e_init_array(self) -> np.ndarray:
        return np.array([v.e_init_kwh for v in self.vehicles])

    def e_final_array(self) -> np.ndarray:
        return np.array([v.e_final_kwh for v in self.vehicles])

    def location_by_name(self, name: str) -> Location:
        for loc, label in self.location_names.items():
            if name == label or name == loc.name:
                return loc
        raise ConfigError(f"unknown location name: {name!r}")


def sample_fleet(seed: int, n: int, home: Location = Location.A) -> list[VehicleSpec]:
    """Draw ``n`` randomized trucks from the case-study parameter ranges.

    Capacity, round-trip efficiency, initial energy, and drive power are
    uniform over their published ranges; the round-trip efficiency is
    split evenly between charge and discharge legs.  Deterministic for a
    fixed seed.
    """
    if n < 1:
        raise ConfigError("sample_fleet requires n >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        capacity = rng.uniform(*CAPACITY_RANGE_KWH)
        roundtrip = rng.uniform(*ROUNDTRIP_EFF_RANGE)
        e_init = rng.uniform(*E_INIT_RANGE_KWH)
        p_drive = rng.uniform(*P_DRIVE_RANGE_KW)
        eta = math.sqrt(roundtrip)
        out.append(
            VehicleSpec(
                id=i,
                capacity_kwh=capacity,
                e_init_kwh=e_init,
                eta_c=eta,
                eta_d=eta,
                p_drive_kw=p_drive,
                home=home,
            )
        )
    return out


# --------------------------------------------------------------------------
# Config document parsing / serialization
# --------------------------------------------------------------------------

_VEHICLE_KEYS = {
    "id",
    "capacity_kwh",
    "e_init_kwh",
    "e_min_kwh",
    "e_final_kwh",
    "eta_c",
    "eta_d",
    "p_drive_kw",
    "home",
}


def _parse_location(token: str) -> Location:
    try:
        return Location[str(token)]
    except KeyError:
        raise ConfigError(f"unknown location id: {token!r} (expected A, B, or C)") from None


def parse_config(text: str) -> FleetConfig:
    """Parse a fleet configuration document into a validated ``FleetConfig``.

    The document is TOML with sections ``[horizon]``, ``[charger]``,
    ``[delivery]``, ``[distances]``, optional ``[locations]`` labels, and
    repeated ``[[vehicle]]`` blocks.  Energies are kWh, powers kW.
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    try:
        horizon = Horizon(**doc.get("horizon", {}))
        charger = ChargerSpec(**doc.get("charger", {}))
    except TypeError as exc:
        raise ConfigError(f"unknown config field: {exc}") from None

    dsec = doc.get("delivery", {})
    min_visits = {
        _parse_location(k): int(v) for k, v in dsec.get("min_visits", {}).items()
    }
    try:
        window = VisitWindow(dsec.get("window", "per_day"))
    except ValueError:
        raise ConfigError(
            f"delivery window must be 'per_day' or 'whole_horizon', got {dsec.get('window')!r}"
        ) from None
    delivery = DeliveryRequirement(min_visits=min_visits, window=window)

    vehicles = []
    for i, vsec in enumerate(doc.get("vehicle", [])):
        unknown = set(vsec) - _VEHICLE_KEYS
        if unknown:
            raise ConfigError(f"vehicle block {i}: unknown fields {sorted(unknown)}")
        kwargs = dict(vsec)
        kwargs.setdefault("id", i)
        if "home" in kwargs:
            kwargs["home"] = _parse_location(kwargs["home"])
        if "capacity_kwh" not in kwargs or "e_init_kwh" not in kwargs:
            raise ConfigError(f"vehicle block {i}: capacity_kwh and e_init_kwh are required")
        vehicles.append(VehicleSpec(**kwargs))
    if not vehicles:
        raise ConfigError("config must declare at least one [[vehicle]] block")

    distances = {}
    for key, d in doc.get("distances", {}).items():
        parts = key.split("_")
        if len(parts) != 2:
            raise ConfigError(f"distance key must look like 'A_B', got {key!r}")
        distances[(_parse_location(parts[0]), _parse_location(parts[1]))] = float(d)

    names = {}
    for key, label in doc.get("locations", {}).items():
        names[_parse_location(key)] = str(label)

    return FleetConfig(
        vehicles=tuple(vehicles),
        charger=charger,
        horizon=horizon,
        delivery=delivery,
        distances_mi=distances or dict(DEFAULT_DISTANCES_MI),
        location_names=names or dict(DEFAULT_LOCATION_NAMES),
    )


def parse_config_file(path) -> FleetConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_config(config: FleetConfig) -> str:
    """Render a ``FleetConfig`` back to its document form.

    ``parse_config(serialize_config(c))`` reproduces ``c`` exactly.
    """
    lines = ["[horizon]"]
    for k in ("steps_per_day", "num_days", "dt_hours"):
        lines.append(f"{k} = {_toml_value(getattr(config.horizon, k))}")
    lines += ["", "[charger]"]
    for k in ("p_c_max_kw", "p_d_max_kw"):
        lines.append(f"{k} = {_toml_value(getattr(config.charger, k))}")
    lines += ["", "[delivery]"]
    lines.append(f'window = "{config.delivery.window.value}"')
    visits = ", ".join(
        f"{loc.name} = {config.delivery.min_visits[loc]}" for loc in LOCATIONS
    )
    lines.append("min_visits = { " + visits + " }")
    lines += ["", "[locations]"]
    for loc in LOCATIONS:
        lines.append(f"{loc.name} = {_toml_value(config.location_names[loc])}")
    lines += ["", "[distances]"]
    for a, b in ((Location.A, Location.B), (Location.A, Location.C), (Location.B, Location.C)):
        lines.append(f"{a.name}_{b.name} = {_toml_value(config.distances_mi[(a, b)])}")
    for v in config.vehicles:
        lines += ["", "[[vehicle]]"]
        lines.append(f"id = {v.id}")
        for k in ("capacity_kwh", "e_init_kwh", "e_min_kwh", "e_final_kwh",
                  "eta_c", "eta_d", "p_drive_kw"):
            lines.append(f"{k} = {_toml_value(getattr(v, k))}")
        lines.append(f'home = "{v.home.name}"')
    return "\n".join(lines) + "\n"


def vehicles_for_day(vehicles: tuple[VehicleSpec, ...]) -> tuple[VehicleSpec, ...]:
    """Vehicle specs for a continuation day: the battery starts from the
    previous day's mandated final energy."""
    return tuple(replace(v, e_init_kwh=v.e_final_kwh) for v in vehicles)
