"""Exception types raised across the package."""


class ReachabilityError(ValueError):
    """Radius too small for nodes in adjacent boxes to talk to each other."""

    def __init__(self, c, alpha):
        self.required_c = 5.0 * alpha
        super().__init__(
            f"c={c:g} < 5*alpha={self.required_c:g}: nodes in adjacent boxes are "
            f"not guaranteed to be within radius; need c >= {self.required_c:g}"
        )


class IrregularGraphError(ValueError):
    """A box that routing or roadmap construction depends on is empty or out of bounds."""

    def __init__(self, message, boxes=()):
        self.boxes = tuple(boxes)
        super().__init__(message)


class TooLargeError(ValueError):
    pass


class NumericError(ArithmeticError):
    """Iterative eigen-solve failed, or a quantity left its valid range."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class DisconnectedError(NumericError):
    """lambda2 >= 1: the averaging process does not mix."""


class NoDecayError(NumericError):
    """Fitted log-error slope is not negative."""


class ConvergedError(NumericError):
    """The error hit exactly zero inside the fitting window."""


class InvalidRoadmapError(ValueError):
    pass


class InfiniteResistanceError(ArithmeticError):
    """A canonical path uses a flight with zero capacity."""
