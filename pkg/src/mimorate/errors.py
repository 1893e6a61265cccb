"""Exceptions raised by the numerical guards."""


class NumericalGuardError(ArithmeticError):
    """A matrix needed by a rate computation is too ill-conditioned to use."""
