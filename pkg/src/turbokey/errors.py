class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(ArithmeticError):
    """A quadrature or root search failed to converge.

    ``estimates`` holds the last values computed before giving up, so callers
    can log how far off convergence was.
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)
