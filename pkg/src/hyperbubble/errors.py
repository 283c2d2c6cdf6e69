"""Exception hierarchy shared by all modules."""


class HyperbubbleError(Exception):
    """Base class; ``str(err)`` carries the context."""


class InvalidParams(HyperbubbleError, ValueError):
    pass


class DimensionTooSmall(InvalidParams):
    pass


class ExponentOutOfRange(InvalidParams):
    pass


class LambdaOutOfRange(InvalidParams):
    pass


class CriticalLowDimension(InvalidParams):
    pass


class PointOnBoundary(HyperbubbleError, ValueError):
    pass


class ZeroNormal(HyperbubbleError, ValueError):
    pass


class CenterSingular(HyperbubbleError, ValueError):
    pass


class BadRadii(HyperbubbleError, ValueError):
    pass


class NegativeRadius(HyperbubbleError, ValueError):
    pass


class ShootingFailed(HyperbubbleError, RuntimeError):
    pass


class StiffnessError(HyperbubbleError, RuntimeError):
    pass


class NotConverged(HyperbubbleError, RuntimeError):
    pass


# quadrature-derived scalars use the longer name
QuadratureNotConverged = NotConverged


class ExponentTooSmall(HyperbubbleError, ValueError):
    pass


class DegenerateGrid(HyperbubbleError, ValueError):
    pass


class EigenSolverFailure(HyperbubbleError, RuntimeError):
    pass


class GridTooCoarse(HyperbubbleError, RuntimeError):
    pass


class LinearSolveFailure(HyperbubbleError, RuntimeError):
    pass


class ConstraintRankDeficient(HyperbubbleError, RuntimeError):
    pass


class ConstructionFailed(HyperbubbleError, RuntimeError):
    pass


class NoConvergence(HyperbubbleError, RuntimeError):
    pass


class CollapsedBubbles(HyperbubbleError, RuntimeError):
    pass


class NoiseFloor(HyperbubbleError, RuntimeError):
    pass


class DegenerateConfiguration(HyperbubbleError, ValueError):
    pass


class ConfigInvalid(HyperbubbleError, ValueError):
    pass


class NotCollinear(HyperbubbleError, ValueError):
    pass
