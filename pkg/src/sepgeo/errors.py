"""Exception types shared across the package."""


class NotStrictlyPositive(ValueError):
    """Raised when an operation requires a strictly positive density matrix."""


class FailsPrecondition(ValueError):
    """Raised when an input violates a documented precondition."""


class NonConvergence(RuntimeError):
    """Raised when an iterative method exhausts its budget before reaching its target."""


class IterationBudgetExceeded(NonConvergence):
    """Solver ran out of iterations; carries the best approximation found so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
