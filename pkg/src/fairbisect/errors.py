"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class FairBisectError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FairBisectError, ValueError):
    """Malformed instance or decomposition text."""


class DomainError(FairBisectError, ValueError):
    """An argument refers to something outside the object it is applied to."""


class ParameterError(FairBisectError, ValueError):
    """A numeric parameter is out of its admissible range."""


class BudgetExceeded(FairBisectError, RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""


class ContractError(FairBisectError, RuntimeError):
    """A stage received input violating its precondition, or produced output
    violating its postcondition."""


class BuilderFailure(FairBisectError, RuntimeError):
    """The unbreakable-decomposition builder could not certify its output."""
