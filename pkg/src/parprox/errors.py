"""Exception and warning types raised across the package."""


class ParproxError(Exception):
    """Base class for every error raised by parprox."""


# blockspace
class EmptyPartition(ParproxError, ValueError):
    pass


class InvalidSize(ParproxError, ValueError):
    pass


class PartitionMismatch(ParproxError, ValueError):
    pass


# schedule / engine
class InvalidParams(ParproxError, ValueError):
    pass


class ScheduleMismatch(ParproxError, ValueError):
    pass


# operator evaluation
class EvaluationFailure(ParproxError, ArithmeticError):
    """An operator could not produce a value for the given point."""


class SingularSystem(EvaluationFailure):
    pass


class NoConsistentPattern(EvaluationFailure):
    """No active-set pattern satisfies the sign conditions of the cone."""


class InnerSolverDiverged(EvaluationFailure):
    pass


# monotone catalog
class InvalidProblem(ParproxError, ValueError):
    pass


class InvalidAtom(InvalidProblem):
    pass


class DimensionMismatch(ParproxError, ValueError):
    pass


class DimensionTooLarge(ParproxError, ValueError):
    pass


class DualUnbounded(ParproxError, ArithmeticError):
    pass


class GridTooCoarse(ParproxError, ArithmeticError):
    pass


# problem files
class InputError(ParproxError, ValueError):
    """Base for problem-file errors (CLI exit status 1)."""


class ParseError(InputError):
    def __init__(self, msg, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{msg}{where}")


class SchemaError(InputError):
    def __init__(self, path, msg):
        self.path = path
        super().__init__(f"{path}: {msg}")


class ConsistencyError(InputError):
    def __init__(self, first, second, msg):
        self.fields = (first, second)
        super().__init__(f"{first} vs {second}: {msg}")


class HypothesisWarning(UserWarning):
    """A convergence hypothesis is not claimed (or was refuted) for a run."""
