"""Exception types shared across the package."""


class NlcsbpError(Exception):
    """Base class for all package-specific errors."""


class DomainError(NlcsbpError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DivergesError(NlcsbpError, ArithmeticError):
    """An improper integral required to be finite diverges."""


class NonExplosiveError(NlcsbpError):
    """Operation requires an explosive model but the test integral diverges."""


class ContractError(NlcsbpError):
    """A precondition tying two arguments together is violated."""


class HorizonError(NlcsbpError):
    """A path simulation exhausted its safety horizon without resolving."""


class BudgetError(NlcsbpError):
    """Event budget exhausted before the stopping rule fired."""

    def __init__(self, message, events=None, state=None):
        super().__init__(message)
        self.events = events
        self.state = state


class UndecidedError(NlcsbpError):
    """A down-crossing run ended with the path neither crossed nor escaped.

    Carries the last path state so the caller can resume or inspect.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ConfigError(NlcsbpError, ValueError):
    """Invalid run configuration; ``errors`` lists one message per offence."""

    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
