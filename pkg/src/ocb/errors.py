class DomainError(ValueError):
    """An argument lies outside the region where an operation is defined."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its tolerance.

    ``last`` carries whatever the solver had when it gave up.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last
