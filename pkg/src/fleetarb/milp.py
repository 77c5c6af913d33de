"""Mixed-integer linear program assembly for fleet charging schedules.

The builder turns a fleet configuration, a price scenario set, and a
travel-time table into a sparse MILP: per-location grid-side charge and
discharge powers gated by binary presence indicators, battery state
recursion, travel-time exclusions, and minimum-visit delivery coverage.
Builders are pure functions of immutable inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DataError, InfeasibleError
from .model import LOCATIONS, FleetConfig, Location, VisitWindow
from .prices import PricePanel, ScenarioSet, TravelTimeTable, mean_panel, time_only_panel

# Ordered location pairs, in the order their exclusion rows are emitted.
ORDERED_PAIRS = (
    (Location.A, Location.B),
    (Location.B, Location.A),
    (Location.A, Location.C),
    (Location.C, Location.A),
    (Location.B, Location.C),
    (Location.C, Location.B),
)


class VarKind(enum.IntEnum):
    CHARGE_A = 0
    DISCHARGE_A = 1
    CHARGE_B = 2
    DISCHARGE_B = 3
    CHARGE_C = 4
    DISCHARGE_C = 5
    IND_A = 6
    IND_B = 7
    IND_C = 8
    VISIT_A = 9
    VISIT_B = 10
    VISIT_C = 11
    SOC = 12


CHARGE_KINDS = {
    Location.A: VarKind.CHARGE_A,
    Location.B: VarKind.CHARGE_B,
    Location.C: VarKind.CHARGE_C,
}
DISCHARGE_KINDS = {
    Location.A: VarKind.DISCHARGE_A,
    Location.B: VarKind.DISCHARGE_B,
    Location.C: VarKind.DISCHARGE_C,
}
IND_KINDS = {
    Location.A: VarKind.IND_A,
    Location.B: VarKind.IND_B,
    Location.C: VarKind.IND_C,
}
VISIT_KINDS = {
    Location.A: VarKind.VISIT_A,
    Location.B: VarKind.VISIT_B,
    Location.C: VarKind.VISIT_C,
}

_NAME_PREFIX = {
    VarKind.CHARGE_A: "c_A",
    VarKind.DISCHARGE_A: "d_A",
    VarKind.CHARGE_B: "c_B",
    VarKind.DISCHARGE_B: "d_B",
    VarKind.CHARGE_C: "c_C",
    VarKind.DISCHARGE_C: "d_C",
    VarKind.IND_A: "ind_A",
    VarKind.IND_B: "ind_B",
    VarKind.IND_C: "ind_C",
    VarKind.VISIT_A: "visit_A",
    VarKind.VISIT_B: "visit_B",
    VarKind.VISIT_C: "visit_C",
    VarKind.SOC: "soc",
}

_WINDOW_KINDS = frozenset((VarKind.VISIT_A, VarKind.VISIT_B, VarKind.VISIT_C))


@dataclass(frozen=True)
class VarIndex:
    """Bijective map from (kind, vehicle, step-or-window) to a dense column
    range.  Kinds are laid out in enum order; within a kind, columns are
    vehicle-major then step-major."""

    n_vehicles: int
    n_steps: int
    n_windows: int
    _offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        offsets = []
        at = 0
        for kind in VarKind:
            offsets.append(at)
            at += self.n_vehicles * self._span(kind)
        object.__setattr__(self, "_offsets", tuple(offsets))

    def _span(self, kind: VarKind) -> int:
        return self.n_windows if kind in _WINDOW_KINDS else self.n_steps

    @property
    def n_cols(self) -> int:
        return self._offsets[-1] + self.n_vehicles * self._span(VarKind.SOC)

    def col(self, kind: VarKind, vehicle: int, step: int) -> int:
        return self._offsets[kind] + vehicle * self._span(kind) + step

    def decode(self, col: int) -> tuple[VarKind, int, int]:
        for kind in reversed(VarKind):
            base = self._offsets[kind]
            if col >= base:
                rel = col - base
                span = self._span(kind)
                return kind, rel // span, rel % span
        raise IndexError(col)

    def name(self, col: int) -> str:
        kind, vehicle, step = self.decode(col)
        tag = "d" if kind in _WINDOW_KINDS else "t"
        return f"{_NAME_PREFIX[kind]}_n{vehicle}_{tag}{step}"

    def block(self, kind: VarKind) -> slice:
        base = self._offsets[kind]
        return slice(base, base + self.n_vehicles * self._span(kind))


class _RowBuilder:
    """Accumulates sparse rows before freezing them into CSR."""

    def __init__(self) -> None:
        self.data: list[float] = []
        self.indices: list[int] = []
        self.indptr: list[int] = [0]
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.names: list[str] = []

    def add(self, cols, coefs, sense: str, rhs: float, name: str) -> None:
        # Canonical form: columns sorted ascending within each row.
        order = sorted(range(len(cols)), key=lambda i: cols[i])
        self.indices.extend(cols[i] for i in order)
        self.data.extend(float(coefs[i]) for i in order)
        self.indptr.append(len(self.indices))
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.names.append(name)

    def freeze(self, n_cols: int) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray, list[str]]:
        a = sp.csr_matrix(
            (np.asarray(self.data), np.asarray(self.indices, dtype=np.int64),
             np.asarray(self.indptr, dtype=np.int64)),
            shape=(len(self.rhs), n_cols),
        )
        return a, np.array(self.senses, dtype="U1"), np.asarray(self.rhs), self.names


@dataclass(frozen=True)
class MilpInstance:
    """Sparse MILP in row form: ``a x (sense) rhs`` with column bounds,
    integrality flags, and a linear objective to minimize."""

    name: str
    index: VarIndex
    lower: np.ndarray
    upper: np.ndarray
    is_integer: np.ndarray
    obj: np.ndarray
    a: sp.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    row_names: list[str]
    dt_hours: float = 0.25
    steps_per_day: int = 0

    def __post_init__(self) -> None:
        n = self.index.n_cols
        if not (len(self.lower) == len(self.upper) == len(self.obj) == n == self.a.shape[1]):
            raise DataError("instance dimension mismatch between bounds and matrix")
        if np.any(self.lower > self.upper + 1e-12):
            raise DataError("instance has a lower bound above its upper bound")
        for arr in (self.lower, self.upper, self.is_integer, self.obj, self.rhs):
            arr.setflags(write=False)

    @property
    def n_cols(self) -> int:
        return self.index.n_cols

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]

    def col_names(self) -> list[str]:
        return [self.index.name(j) for j in range(self.n_cols)]

    def integer_cols(self) -> np.ndarray:
        return np.flatnonzero(self.is_integer)

    def free_binary_cols(self) -> np.ndarray:
        """Integer columns not pinned by equal bounds."""
        return np.flatnonzero(self.is_integer & (self.upper - self.lower > 0.5))

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray) -> "MilpInstance":
        """Same instance with replacement column bounds."""
        from dataclasses import replace

        return replace(self, lower=np.array(lower), upper=np.array(upper))

    def canonical_bytes(self) -> bytes:
        """Deterministic byte serialization of the full instance."""
        out = [f"milp {self.name} cols={self.n_cols} rows={self.n_rows}"]
        names = self.col_names()
        for j in range(self.n_cols):
            out.append(
                f"col {names[j]} lb={self.lower[j]:.17g} ub={self.upper[j]:.17g} "
                f"int={int(self.is_integer[j])} obj={self.obj[j]:.17g}"
            )
        indptr, indices, data = self.a.indptr, self.a.indices, self.a.data
        for i in range(self.n_rows):
            terms = " ".join(
                f"{names[indices[k]]}:{data[k]:.17g}"
                for k in range(indptr[i], indptr[i + 1])
            )
            out.append(f"row {self.row_names[i]} {self.senses[i]} rhs={self.rhs[i]:.17g} {terms}")
        return "\n".join(out).encode()


class Mode(enum.Enum):
    SPATIAL = "spatial"
    STATIONARY = "stationary"


class StartCondition(enum.Enum):
    """How the first step is tied to the vehicle's home location.

    PRESENCE pins the vehicle at home in the first step.  DEPARTURE treats
    the step before the horizon as spent at home, so the vehicle may
    already be in transit at step 0 but cannot appear elsewhere before the
    travel time from home has elapsed.  DEPARTURE makes per-day solves of
    a multi-day horizon match the single long-horizon model.
    """

    PRESENCE = "presence"
    DEPARTURE = "departure"


def build(
    config: FleetConfig,
    scenarios: ScenarioSet,
    travel: TravelTimeTable,
    mode: Mode = Mode.SPATIAL,
    *,
    objective_panel: PricePanel | None = None,
    start: StartCondition = StartCondition.PRESENCE,
    e_start: np.ndarray | None = None,
    step_offset: int = 0,
    home_return: bool = True,
    name: str = "fleet",
) -> MilpInstance:
    """Assemble the fleet charging MILP.

    The objective minimizes expected energy cost over the scenario set,
    which by linearity equals the cost under the scenario-mean panel; the
    constraint rows never depend on prices.  ``step_offset`` aligns
    departure-time-dependent travel lookups when the horizon is a slice of
    a longer day sequence.
    """
    horizon = config.horizon
    n = config.n_vehicles
    t_total = horizon.total_steps
    dt = horizon.dt_hours

    if scenarios.n_steps != t_total:
        raise DataError(
            f"scenario horizon {scenarios.n_steps} != config horizon {t_total}"
        )
    panel = objective_panel if objective_panel is not None else mean_panel(scenarios)
    if panel.n_steps != t_total:
        raise DataError("objective panel horizon does not match config horizon")

    if config.delivery.window is VisitWindow.PER_DAY:
        windows = [horizon.day_slice(d) for d in range(horizon.num_days)]
    else:
        windows = [slice(0, t_total)]

    if mode is Mode.SPATIAL:
        for loc in LOCATIONS:
            need = config.delivery.min_visits[loc]
            if need > n:
                raise InfeasibleError(
                    f"delivery needs {need} vehicles at {loc.name} but fleet has {n}"
                )

    if e_start is None:
        e_start = config.e_init_array()
    else:
        e_start = np.asarray(e_start, dtype=float)
        if e_start.shape != (n,):
            raise DataError("e_start must provide one value per vehicle")

    index = VarIndex(n_vehicles=n, n_steps=t_total, n_windows=len(windows))
    n_cols = index.n_cols
    lower = np.zeros(n_cols)
    upper = np.zeros(n_cols)
    is_int = np.zeros(n_cols, dtype=bool)
    obj = np.zeros(n_cols)

    pc, pd = config.charger.p_c_max_kw, config.charger.p_d_max_kw
    for loc in LOCATIONS:
        upper[index.block(CHARGE_KINDS[loc])] = pc
        upper[index.block(DISCHARGE_KINDS[loc])] = pd
        for kind in (IND_KINDS[loc], VISIT_KINDS[loc]):
            upper[index.block(kind)] = 1.0
            is_int[index.block(kind)] = True
    # SOC bounds are per-vehicle, so fill them vehicle by vehicle.
    for vi, v in enumerate(config.vehicles):
        base = index.col(VarKind.SOC, vi, 0)
        lower[base:base + t_total] = v.e_min_kwh
        upper[base:base + t_total] = v.capacity_kwh

    # Objective: pay for grid charge, earn for grid discharge, per step.
    for loc in LOCATIONS:
        prices = panel.series(loc)
        for vi in range(n):
            cbase = index.col(CHARGE_KINDS[loc], vi, 0)
            dbase = index.col(DISCHARGE_KINDS[loc], vi, 0)
            obj[cbase:cbase + t_total] = prices * dt
            obj[dbase:dbase + t_total] = -prices * dt

    # Variable fixings via bounds: stationary pinning, home start, daily
    # home return, and daily final state of charge.
    spd = horizon.steps_per_day
    if mode is Mode.STATIONARY:
        for vi in range(n):
            for loc in LOCATIONS:
                iv = 1.0 if loc is Location.A else 0.0
                b = index.col(IND_KINDS[loc], vi, 0)
                lower[b:b + t_total] = iv
                upper[b:b + t_total] = iv
                wb = index.col(VISIT_KINDS[loc], vi, 0)
                lower[wb:wb + len(windows)] = iv
                upper[wb:wb + len(windows)] = iv
    else:
        for vi, v in enumerate(config.vehicles):
            if start is StartCondition.PRESENCE:
                j = index.col(IND_KINDS[v.home], vi, 0)
                lower[j] = upper[j] = 1.0
            else:
                depart = max(step_offset - 1, 0)
                for loc in LOCATIONS:
                    if loc is v.home:
                        continue
                    tau = travel.steps(v.home, loc, depart)
                    for s in range(min(tau, t_total)):
                        j = index.col(IND_KINDS[loc], vi, s)
                        upper[j] = 0.0
            if home_return:
                for d in range(1, horizon.num_days + 1):
                    j = index.col(IND_KINDS[v.home], vi, d * spd - 1)
                    lower[j] = upper[j] = 1.0
    for vi, v in enumerate(config.vehicles):
        for d in range(1, horizon.num_days + 1):
            j = index.col(VarKind.SOC, vi, d * spd - 1)
            lower[j] = upper[j] = v.e_final_kwh

    rows = _RowBuilder()

    # Charger gating: power can flow at a location only while present.
    for vi in range(n):
        for t in range(t_total):
            for loc in LOCATIONS:
                ind = index.col(IND_KINDS[loc], vi, t)
                rows.add(
                    [index.col(CHARGE_KINDS[loc], vi, t), ind], [1.0, -pc],
                    "L", 0.0, f"gc_{loc.name}_n{vi}_t{t}",
                )
                rows.add(
                    [index.col(DISCHARGE_KINDS[loc], vi, t), ind], [1.0, -pd],
                    "L", 0.0, f"gd_{loc.name}_n{vi}_t{t}",
                )

    # Battery recursion, with driving draw whenever no indicator is set.
    for vi, v in enumerate(config.vehicles):
        for t in range(t_total):
            cols = [index.col(VarKind.SOC, vi, t)]
            coefs = [1.0]
            if t > 0:
                cols.append(index.col(VarKind.SOC, vi, t - 1))
                coefs.append(-1.0)
            for loc in LOCATIONS:
                cols.append(index.col(CHARGE_KINDS[loc], vi, t))
                coefs.append(-dt * v.eta_c)
                cols.append(index.col(DISCHARGE_KINDS[loc], vi, t))
                coefs.append(dt / v.eta_d)
                cols.append(index.col(IND_KINDS[loc], vi, t))
                coefs.append(-dt * v.p_drive_kw)
            rhs = -dt * v.p_drive_kw + (e_start[vi] if t == 0 else 0.0)
            rows.add(cols, coefs, "E", rhs, f"soc_n{vi}_t{t}")

    # At most one location at a time.
    for vi in range(n):
        for t in range(t_total):
            rows.add(
                [index.col(IND_KINDS[loc], vi, t) for loc in LOCATIONS],
                [1.0, 1.0, 1.0], "L", 1.0, f"oneloc_n{vi}_t{t}",
            )

    # Travel exclusion: after leaving L1, the vehicle cannot surface at L2
    # until the travel time has elapsed.  The rows hold unconditionally and
    # are vacuous whenever the departure indicator is zero.
    for vi in range(n):
        for t in range(t_total):
            for l1, l2 in ORDERED_PAIRS:
                tau_max = travel.steps(l1, l2, step_offset + t)
                for tau in range(1, tau_max + 1):
                    if t + tau >= t_total:
                        break
                    rows.add(
                        [index.col(IND_KINDS[l1], vi, t),
                         index.col(IND_KINDS[l2], vi, t + tau)],
                        [1.0, 1.0], "L", 1.0,
                        f"trv_{l1.name}{l2.name}_n{vi}_t{t}_s{tau}",
                    )

    # Visit indicators: set iff the vehicle is present at least once in the
    # window.
    for vi in range(n):
        for w, window in enumerate(windows):
            for loc in LOCATIONS:
                vcol = index.col(VISIT_KINDS[loc], vi, w)
                steps = range(window.start, window.stop)
                for t in steps:
                    rows.add(
                        [index.col(IND_KINDS[loc], vi, t), vcol], [-1.0, 1.0],
                        "G", 0.0, f"vlow_{loc.name}_n{vi}_d{w}_t{t}",
                    )
                cols = [vcol] + [index.col(IND_KINDS[loc], vi, t) for t in steps]
                coefs = [1.0] + [-1.0] * len(range(window.start, window.stop))
                rows.add(cols, coefs, "L", 0.0, f"vup_{loc.name}_n{vi}_d{w}")

    # Delivery coverage per window.
    if mode is Mode.SPATIAL:
        for w in range(len(windows)):
            for loc in LOCATIONS:
                need = config.delivery.min_visits[loc]
                if need > 0:
                    rows.add(
                        [index.col(VISIT_KINDS[loc], vi, w) for vi in range(n)],
                        [1.0] * n, "G", float(need), f"deliv_{loc.name}_d{w}",
                    )

    a, senses, rhs, row_names = rows.freeze(n_cols)
    return MilpInstance(
        name=name,
        index=index,
        lower=lower,
        upper=upper,
        is_integer=is_int,
        obj=obj,
        a=a,
        senses=senses,
        rhs=rhs,
        row_names=row_names,
        dt_hours=dt,
        steps_per_day=spd,
    )


def pin_home_visits(instance: MilpInstance, config: FleetConfig) -> MilpInstance:
    """Pin each vehicle's home visit flag in the first window to one.

    Admissible only when the instance pins vehicles at home in step 0
    (presence start): the visit linking rows are then already forced, so
    the flag is a vacuous binary and fixing it shrinks the search space
    without changing the optimum.  Used to fit instances under the
    exhaustive oracle's binary budget.
    """
    lo, up = instance.lower.copy(), instance.upper.copy()
    for vi, v in enumerate(config.vehicles):
        start = instance.index.col(IND_KINDS[v.home], vi, 0)
        if not (lo[start] == up[start] == 1.0):
            raise DataError(
                "pin_home_visits requires a presence start (vehicle fixed at "
                "home in step 0)"
            )
        col = instance.index.col(VISIT_KINDS[v.home], vi, 0)
        lo[col] = up[col] = 1.0
    return instance.with_bounds(lo, up)


def build_counterfactual(
    config: FleetConfig,
    scenarios: ScenarioSet,
    travel: TravelTimeTable,
    **kwargs,
) -> MilpInstance:
    """Spatial build whose objective ignores cross-location price spread:
    every location is priced at the step's cross-location mean."""
    kwargs.setdefault("name", "fleet_cf")
    return build(
        config,
        scenarios,
        travel,
        Mode.SPATIAL,
        objective_panel=time_only_panel(mean_panel(scenarios)),
        **kwargs,
    )


def evaluate_cost(schedule, panel: PricePanel) -> float:
    """Settle a schedule against a price panel: positive is money paid,
    negative is profit.

    ``schedule`` provides grid-side ``charge_kw`` and ``discharge_kw``
    arrays of shape (vehicles, steps, locations) plus ``dt_hours``.
    """
    charge, discharge = schedule.charge_kw, schedule.discharge_kw
    if charge.shape[1] != panel.n_steps:
        raise DataError(
            f"schedule has {charge.shape[1]} steps, panel has {panel.n_steps}"
        )
    net = (charge - discharge).sum(axis=0)  # (steps, locations)
    return float((net * panel.values.T).sum() * schedule.dt_hours)
