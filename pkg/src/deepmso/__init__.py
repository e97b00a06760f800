"""Model-free neuro-adaptive dynamic inversion control with an online-trained deep observer."""

from deepmso.errors import (
    ConfigurationError,
    InputError,
    InversionError,
    ObserverError,
    OptimizerError,
    ParseError,
    UsageError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "InputError",
    "InversionError",
    "ObserverError",
    "OptimizerError",
    "ParseError",
    "UsageError",
]
