"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """A caller broke an operation's precondition."""


class ModeViolation(ContractViolation):
    """An oracle access that the active query model forbids."""


class ConfigurationError(ValueError):
    """Invalid configuration or generation parameters."""


class CapacityError(RuntimeError):
    """A simulation size above the supported cap."""
