"""Exception hierarchy shared by all modules."""


class FreeJunctionError(Exception):
    """Base class for every error raised by the package."""


# metric / graph evaluation
class SingularSystem(FreeJunctionError):
    """The normal-field linear system is (numerically) singular."""


class SingularChi(SingularSystem):
    pass


class SingularG(FreeJunctionError):
    pass


class NegativeQuadraticForm(FreeJunctionError):
    pass


# hodograph transform
class NotMonotone(FreeJunctionError):
    pass


class DegenerateJacobian(FreeJunctionError):
    pass


class OutOfDomain(FreeJunctionError):
    pass


# linearization and symbol checks
class InvariantViolation(FreeJunctionError):
    pass


class ZeroFrequency(FreeJunctionError):
    pass


class BadWeights(FreeJunctionError):
    pass


class RootMultiplicity(FreeJunctionError):
    pass


class DimensionMismatch(FreeJunctionError):
    pass


class ParseError(FreeJunctionError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# mesh solver
class DegenerateTriangle(FreeJunctionError):
    pass


class MeshCollapse(DegenerateTriangle):
    pass


class LineSearchFailure(FreeJunctionError):
    pass


class DanglingVertex(FreeJunctionError):
    pass
