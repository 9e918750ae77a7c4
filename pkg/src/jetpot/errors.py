"""Exception hierarchy shared by every jetpot module."""


class JetpotError(Exception):
    """Base class for all library errors."""


class PreconditionError(JetpotError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(PreconditionError):
    """A point lies outside the domain where a formula is defined."""


class EvaluationError(JetpotError):
    """A function oracle returned a non-finite value."""


class CapabilityError(JetpotError, NotImplementedError):
    """The requested operation has no closed form for this variant."""


class SearchFailure(JetpotError):
    """A randomized search exhausted its budget without success."""


class InfeasibleError(JetpotError):
    """No strict approximator of the requested type exists on the domain."""


class HyperbolicityError(JetpotError):
    """A polynomial restricted to a line has non-real roots."""


class StructureError(JetpotError):
    """A ray from a jet never crosses the boundary of a constraint set."""


class GeometryError(JetpotError):
    """A hyperplane is not transversal, or its normal is badly placed."""


class ConstraintViolation(JetpotError):
    """A constrained operator was evaluated outside its constraint set."""


class LevelError(PreconditionError):
    """A level lies outside the admissible range of an operator."""


class ResolutionError(JetpotError):
    """A grid is too coarse to resolve the quantity being measured."""


class Inconclusive(JetpotError):
    """Sampling could not produce enough members to decide a check."""
