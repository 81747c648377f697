"""Exception types shared across the package.

The CLI maps these onto exit codes, so each family stays distinct.
"""


class GeometryError(ValueError):
    """Invalid or empty geometric input."""


class ConfigError(ValueError):
    """A configuration or law that cannot be used as given."""


class LawError(ConfigError):
    """Capacity law violating a hard constraint (boundedness, probabilities)."""


class DegenerateDiscretization(ConfigError):
    """Discretized source or sink set is empty."""


class ResourceLimitError(RuntimeError):
    """Requested lattice exceeds the configured memory budget."""


class InvariantViolation(AssertionError):
    """An exact structural identity failed during a run."""
