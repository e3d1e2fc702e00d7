class ConfigurationError(ValueError):
    """Shapes, sizes or settings that do not fit together."""


class InvalidInputError(ValueError):
    """A caller passed data outside an operation's domain."""


class TrainingAbort(RuntimeError):
    """Raised when training hits a non-finite loss or gradient."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump or {}


class RuleSyntaxError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
