"""Exception hierarchy shared by every stage of the pipeline."""


class RobogestError(Exception):
    """Base class for all package errors."""


class ValidationError(RobogestError, ValueError):
    """Input violates a documented invariant."""


class InvalidFilterSpec(ValidationError):
    pass


class InvalidLength(ValidationError):
    pass


class TooShort(ValidationError):
    pass


class WrongLength(ValidationError):
    pass


class UnknownDigit(ValidationError):
    pass


class JointLimit(RobogestError):
    pass


class Unreachable(RobogestError):
    pass


class NoConvergence(RobogestError):
    pass


class PlanningFailed(RobogestError):
    """IK failed for one point of a Cartesian path.

    ``index`` is the frame at which planning stopped and ``cause`` the
    underlying kinematics error.
    """

    def __init__(self, index, cause):
        super().__init__(f"planning failed at frame {index}: {cause}")
        self.index = index
        self.cause = cause


class EmptySplit(ValidationError):
    pass


class ProvenanceViolation(RobogestError):
    pass


class EmptyClass(ValidationError):
    pass


class IncompatibleReport(ValidationError):
    pass
