"""Exception types shared across the package."""


class ActiveSearchError(Exception):
    """Base class for all package-specific errors."""


class InvalidSparsityError(ActiveSearchError, ValueError):
    """Requested sparsity k is outside [1, n]."""


class InvalidActionError(ActiveSearchError, ValueError):
    """A region action does not fit inside the grid."""


class InvalidParameterError(ActiveSearchError, ValueError):
    """A numeric parameter is outside its valid domain."""


class ActionSetSizeError(ActiveSearchError, ValueError):
    """Enumerating the action set would exceed the configured size guard."""


class NumericalError(ActiveSearchError, RuntimeError):
    """A linear-algebra step failed; message carries diagnostics."""


class ConfigError(ActiveSearchError, ValueError):
    """Invalid experiment or CLI configuration."""
