"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation was called with inputs violating its contract."""


class InfeasibleError(ValueError):
    """A requested code construction is infeasible (e.g. K > 2*Nc)."""


class ConfigError(ValueError):
    """A configuration file or CLI argument set is invalid."""
