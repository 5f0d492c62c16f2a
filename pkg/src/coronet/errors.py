"""Exception hierarchy shared by every coronet module."""


class CoronetError(Exception):
    """Base class; the CLI turns any of these into a nonzero exit."""


class ShapeError(CoronetError, ValueError):
    pass


class InputError(CoronetError, ValueError):
    pass


class StateError(CoronetError, RuntimeError):
    pass


class ConfigError(CoronetError, ValueError):
    pass


class FormatError(CoronetError, ValueError):
    pass


class ParseError(CoronetError, ValueError):
    """Raised for malformed text inputs; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
