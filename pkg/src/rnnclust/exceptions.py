"""Exception hierarchy shared by all modules."""


class RnnClustError(Exception):
    """Base class for package errors."""


class UnknownSymbol(RnnClustError, KeyError):
    pass


class GenerationExhausted(RnnClustError, RuntimeError):
    pass


class AlphabetMismatch(RnnClustError, ValueError):
    pass


class ParseError(RnnClustError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ShapeMismatch(RnnClustError, ValueError):
    pass


class Diverged(RnnClustError, FloatingPointError):
    pass


class EmptySet(RnnClustError, ValueError):
    pass


class SingularSystem(RnnClustError, ArithmeticError):
    pass


class FidelityCheckFailed(RnnClustError, AssertionError):
    pass


class TooFewPoints(RnnClustError, ValueError):
    pass


class ZeroBandwidth(RnnClustError, ValueError):
    pass


class DegenerateData(RnnClustError, ValueError):
    pass


class DegenerateLabels(RnnClustError, ValueError):
    pass


class SingularCovariance(RnnClustError, ArithmeticError):
    pass


class BaseTooSmall(RnnClustError, ValueError):
    pass


class LengthMismatch(RnnClustError, ValueError):
    pass


class ConstantSequence(RnnClustError, ValueError):
    pass


class EmptyTrace(RnnClustError, ValueError):
    pass


class IncompleteAutomaton(RnnClustError, ValueError):
    def __init__(self, holes):
        self.holes = list(holes)
        super().__init__(f"automaton has {len(self.holes)} undefined transitions: {self.holes[:10]}")
