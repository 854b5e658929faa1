"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: validation and hypothesis failures
exit with 1, budget overruns with 2, and inconsistencies (which would
falsify a proved statement) with 3.
"""


class RipsHomotopyError(Exception):
    """Base class for all package errors."""


class ValidationError(RipsHomotopyError, ValueError):
    """Malformed input: ragged coordinates, broken metric axioms, bad indices."""


class HypothesisError(RipsHomotopyError):
    """A precondition of a stability statement does not hold for the input."""


class BudgetExceeded(RipsHomotopyError):
    """A construction would exceed the configured size budget."""


class InconsistencyError(RipsHomotopyError):
    """Internal contradiction: a certificate or construction that must exist does not."""
