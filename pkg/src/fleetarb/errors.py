"""Exception hierarchy shared across the package."""


class FleetArbError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FleetArbError):
    """Malformed or semantically invalid fleet configuration."""


class DataError(FleetArbError):
    """Bad input data: price files, traffic files, dimension mismatches."""


class InfeasibleError(FleetArbError):
    """The optimization problem admits no feasible solution."""


class SolverError(FleetArbError):
    """Numerical breakdown inside the LP/MILP solver."""


class OracleSizeError(FleetArbError):
    """Instance has more free binaries than the exhaustive oracle accepts."""
