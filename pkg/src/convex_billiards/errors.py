"""Exception hierarchy shared by all modules.

The CLI maps every :class:`BilliardError` to exit code 1 and prints the
class name with the message, so messages should name the offending value.
"""


class BilliardError(Exception):
    """Base class for recoverable computation errors."""


class SpecError(BilliardError):
    """Bad domain specification (unknown kind, non-convex boundary, ...)."""


class OriginOutside(BilliardError):
    pass


class CoordinateOutOfRange(BilliardError):
    pass


class TangentialState(BilliardError):
    """Reflection angle too close to 0 or pi for a reliable chord solve."""


class NotOneRotation(BilliardError):
    pass


class NoConvergence(BilliardError):
    pass


class BelowMinimumJ(BilliardError):
    pass


class WrongCount(BilliardError):
    def __init__(self, n: int, message: str = ""):
        self.n = n
        super().__init__(message or f"orbit sweep found {n} orbits, expected 8")


class CrossCheckFailed(BilliardError):
    pass


class NotCausticFamily(BilliardError):
    pass


class ModulusOutOfRange(BilliardError):
    pass


class NoRoot(BilliardError):
    pass


class NegativeRadicand(BilliardError):
    def __init__(self, node: int, value: float):
        self.node = node
        self.value = value
        super().__init__(f"radicand {value:.6g} < 0 at quadrature node {node}")


class UnderResolved(BilliardError):
    pass


class DegenerateFit(BilliardError):
    pass
