"""Provide exception classes of pyolcpm.

All of them derive from ValueError so that callers which only expect
invalid input errors can keep catching ValueError.
"""

from typing import List, Optional


class InstanceValidationError(ValueError):
    """An instance (or instance file) violates the model invariants."""

    def __init__(self, violations: List[str], source: Optional[str] = None) -> None:
        """Create InstanceValidationError object.

        Args:
            violations (List[str]): Human readable violations, one per rule
            source (Optional[str]): Path or name of the offending input
        """
        self.violations = list(violations)
        self.source = source
        head = "Invalid instance" if source is None else f"Invalid instance: {source}"
        super().__init__(head + " / " + "; ".join(self.violations))


class EnumerationInfeasibleError(ValueError):
    """An exact enumeration would visit more items than the configured cap."""

    def __init__(self, what: str, count: int, cap: int) -> None:
        self.what = what
        self.count = count
        self.cap = cap
        super().__init__(
            f"Unexpected size of the enumeration: {what} = {count} / "
            f"it must be {cap} or less"
        )


class BudgetExceededError(ValueError):
    """A defaulted replication count exceeds the replication cap."""

    def __init__(self, replications: int, cap: int) -> None:
        self.replications = replications
        self.cap = cap
        super().__init__(
            f"Unexpected number of replications: {replications} / "
            f"it must be {cap} or less unless large runs are allowed"
        )


class InfeasibleParametersError(ValueError):
    """Parameters of a reduction or a solver do not satisfy their preconditions."""


class BalanceViolationError(InfeasibleParametersError):
    """The instance is not balanced with respect to the given omega."""


class SupportShapeError(InfeasibleParametersError):
    """Outcome supports are not of the zero/value two-point shape."""
