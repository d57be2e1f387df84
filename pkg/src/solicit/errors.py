"""Exception hierarchy shared by the engines, planner and CLI."""


class SolicitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidLawError(SolicitError, ValueError):
    """A response law or prior was constructed with inconsistent parameters."""


class ConditioningError(SolicitError, ValueError):
    """Conditioning on an event of probability zero (vanishing survival)."""


class TruncationError(SolicitError, ArithmeticError):
    """The despair-time series did not reach the alpha threshold within hard_cap terms."""

    def __init__(self, message, residual=None, n_terms=None):
        super().__init__(message)
        self.residual = residual
        self.n_terms = n_terms


class StateBudgetError(SolicitError, ValueError):
    """Brute-force enumeration would exceed the configured state budget."""


class InfeasibleError(SolicitError):
    """No parameter inside the search bracket meets the sales target."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class CurveDomainError(SolicitError, ValueError):
    """A price curve was evaluated outside its tabulated range."""
