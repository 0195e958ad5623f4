"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when arguments violate an operation's preconditions."""


class NumericalError(ArithmeticError):
    """Raised when a computation produces non-finite values.

    Attributes:
        iteration: Iteration index at which the failure was detected, if known.
        particle: Index of the first offending particle, if known.
    """

    def __init__(self, message, iteration=None, particle=None):
        super().__init__(message)
        self.iteration = iteration
        self.particle = particle
        # filled in by the sampler so callers can inspect the run up to the failure
        self.trajectory = None
