"""Exception hierarchy shared across the package."""


class DeepMSOError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DeepMSOError, ValueError):
    pass


class ParseError(ConfigurationError):
    """Experiment file problem; carries the offending line when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InputError(DeepMSOError, ValueError):
    pass


class UsageError(DeepMSOError, RuntimeError):
    pass


class OptimizerError(DeepMSOError, FloatingPointError):
    pass


class ObserverError(DeepMSOError, FloatingPointError):
    pass


class InversionError(DeepMSOError, ArithmeticError):
    pass
