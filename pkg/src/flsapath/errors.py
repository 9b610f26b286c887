"""Exception types raised by flsapath."""


class InvalidArgument(ValueError):
    """Bad user input: wrong shapes, non-finite data, negative penalties."""


class InvariantError(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""


class ConvergenceError(RuntimeError):
    """The iterative oracle hit its iteration cap."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ParseError(InvalidArgument):
    """Malformed input file; the message carries the file name and line."""
