"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class ConstraintConflictError(ValueError):
    """Two knowledge constraints disagree about the same ordered pair."""

    def __init__(self, i: int, j: int):
        self.pair = (i, j)
        super().__init__(f"conflicting constraints on ordered pair ({i}, {j})")


class IngestionError(ValueError):
    """A data file could not be parsed; message carries row/column diagnostics."""


class DegenerateSampleError(ValueError):
    """A statistic is undefined for the given sample (e.g. zero variance)."""


class NumericError(ArithmeticError):
    """A numeric routine received or produced non-finite values."""


class DivergedError(RuntimeError):
    """The solver produced a non-finite objective; carries the convergence log."""

    def __init__(self, message: str, log=None):
        self.log = log if log is not None else []
        super().__init__(message)
