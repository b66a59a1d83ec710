"""Exception hierarchy shared by the analysis modules."""


class AnalysisError(Exception):
    """Base class for every error raised by this package."""


class InputError(AnalysisError):
    """Problem with the data handed in (maps to CLI exit code 1)."""


class StatisticalError(AnalysisError):
    """Estimation or test failure (maps to CLI exit code 2)."""


class MalformedRecord(InputError):
    def __init__(self, line_number, reason, line=None):
        self.line_number = line_number
        self.reason = reason
        self.line = line
        super().__init__(f"line {line_number}: {reason}")


class NoRecords(InputError):
    pass


class ConfigError(InputError):
    pass


class DegenerateInput(InputError):
    pass


class LengthMismatch(InputError):
    pass


class DegenerateSegment(InputError):
    pass


class DomainError(InputError):
    pass


class DivisionByZero(StatisticalError, ZeroDivisionError):
    pass


class ZeroVariance(StatisticalError):
    pass


class SingularRegression(StatisticalError):
    pass


class NonInvertible(StatisticalError):
    pass


class NonConvergence(StatisticalError):
    """Optimizer gave up; ``best_x`` and ``best_objective`` hold the best point seen."""

    def __init__(self, iterations, best_objective, best_x=None, message=""):
        self.iterations = iterations
        self.best_objective = best_objective
        self.best_x = best_x
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(best objective {best_objective!r}) {message}".rstrip()
        )
