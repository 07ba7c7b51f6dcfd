"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class UnsupportedProblemError(ValueError):
    """The request lies outside the solvable regime (e.g. n != 3 synthesis)."""


class AccuracyError(RuntimeError):
    """A numerical integration drifted beyond its error budget."""
