"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class ResourceLimitError(InvalidInputError):
    """Raised when a request would allocate an unreasonably large object."""


class IllConditionedWeightsError(InvalidInputError):
    """Raised when ``y y'`` is singular or too badly conditioned to invert."""

    def __init__(self, condition_number: float, limit: float):
        self.condition_number = condition_number
        self.limit = limit
        super().__init__(
            f"weight matrix is ill-conditioned: cond(y y') = {condition_number:.3e} "
            f"exceeds the limit {limit:.1e}"
        )


class SamplerInitError(InvalidInputError):
    """Raised when a chain is started at a point of zero target density."""


class ScenarioError(InvalidInputError):
    """Raised for malformed or inconsistent scenario descriptions."""
