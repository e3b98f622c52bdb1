"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config/usage problems -> 1,
data problems -> 2, search failures -> 3.
"""


class RuleFrontError(Exception):
    """Base class for all package errors."""


class ConfigError(RuleFrontError):
    """Invalid configuration or parameter value."""


class StructuralError(RuleFrontError):
    """A rule, rule set, or column reference violates structural invariants."""


class DataError(RuleFrontError):
    """Input data cannot be loaded or fails validation."""


class DegenerateInputError(DataError):
    """Numerically degenerate input (e.g. constant effect estimates)."""


class EmptyPoolError(RuleFrontError):
    """Rule mining produced no candidate rules (min_support too high)."""


class InsufficientDataError(RuleFrontError):
    """Too few covered observations to compute the requested statistic."""


class BudgetExceededError(RuleFrontError):
    """Exhaustive enumeration would exceed the configured budget."""


class SearchError(RuleFrontError):
    """The annealing search (or a full sweep) failed to produce a result."""
