"""Exception types shared across the package."""


class SurgeflowError(Exception):
    """Base class for all package errors."""


class PreconditionViolated(SurgeflowError, ValueError):
    pass


class OutOfRange(PreconditionViolated):
    pass


class CriticalPoint(SurgeflowError, ValueError):
    """Raised when a map's derivative vanishes where a Schwarzian is requested."""


class InversionFailure(SurgeflowError, ZeroDivisionError):
    pass


class QuadratureDivergence(SurgeflowError, ArithmeticError):
    pass


class GridTooCoarse(SurgeflowError, ValueError):
    pass


class SizeLimit(SurgeflowError, ValueError):
    pass


class StepFailure(SurgeflowError, ArithmeticError):
    pass


class DomainExit(SurgeflowError, ValueError):
    pass


class RestartNotDescending(SurgeflowError):
    """The model's restart path failed to lower f below the stratum value."""


class SurgeryBudgetExceeded(SurgeflowError):
    pass


class AxiomViolation(SurgeflowError):
    def __init__(self, item: str, message: str):
        super().__init__(f"axiom ({item}) violated: {message}")
        self.item = item


class InvalidTopology(PreconditionViolated):
    pass


class OutOfCollar(OutOfRange):
    pass
