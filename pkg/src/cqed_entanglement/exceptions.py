"""Exception types raised across the package."""


class DegenerateCorrelation(ValueError):
    """A normalized correlation has a vanishing denominator."""


class NonUniqueSteadyState(RuntimeError):
    """The Liouvillian has more than one stationary state."""


class DimensionTooLarge(ValueError):
    """The requested truncation exceeds the dense-matrix memory budget."""


class StepTooLarge(ValueError):
    """Trajectory step violates the accuracy guard."""


class InsufficientStatistics(RuntimeError):
    """Not enough detection events for a trustworthy estimate."""


class NotUnimodal(ValueError):
    """A peak search found more than one local maximum."""


class NotFound(LookupError):
    """A parameter scan finished without a hit."""
