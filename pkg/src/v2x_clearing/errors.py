"""Exception types raised across the package."""


class MarketError(ValueError):
    """Base class for every error raised by this package."""


class ValidationError(MarketError):
    """Input data violates a structural rule (timeline, book, file schema)."""


class BudgetExceeded(MarketError):
    """A solver would need more states than it was allowed to enumerate."""

    def __init__(self, message: str, required: int, budget: int):
        super().__init__(message)
        self.required = required
        self.budget = budget


class StageError(MarketError):
    """Wraps a failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
