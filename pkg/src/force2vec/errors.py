"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, bad input exits 2,
numeric failures during training exit 3.
"""


class Force2VecError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(Force2VecError, ValueError):
    """Malformed text input. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(Force2VecError, ValueError):
    """Well-formed input that violates a precondition."""


class ConfigError(Force2VecError, ValueError):
    """Invalid hyper-parameter or model selection."""


class TrainingError(Force2VecError, RuntimeError):
    """Training produced a non-finite coordinate."""

    def __init__(self, message: str, iteration: int | None = None, vertex: int | None = None):
        self.iteration = iteration
        self.vertex = vertex
        super().__init__(message)
