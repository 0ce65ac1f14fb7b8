"""Exception hierarchy shared by the library and the command line tool."""


class FixedSequenceError(Exception):
    """Base class for all errors raised by :mod:`fixedseq`."""


class ParameterError(FixedSequenceError, ValueError):
    """Invalid procedure parameter (alpha, k, m) or malformed input values."""


class DegenerateStatisticError(FixedSequenceError, ValueError):
    """A test statistic is undefined, e.g. a row with zero sample variance.

    ``rows`` lists the offending (0-based) row indices when known.
    """

    def __init__(self, message, rows=()):
        super().__init__(message)
        self.rows = tuple(rows)


class NumericalError(FixedSequenceError, ArithmeticError):
    """Root finding or another numerical routine failed to converge."""


class OracleScopeError(FixedSequenceError, ValueError):
    """The requested exact evaluation is outside what an oracle supports."""


class ParseError(FixedSequenceError, ValueError):
    """Input file could not be parsed; ``line`` is 1-based when available."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
