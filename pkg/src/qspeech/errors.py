"""Exception types shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, ``DataError``
exits 2, ``NumericalError`` exits 3.
"""


class DataError(Exception):
    """Malformed or inconsistent external data (manifests, files, configs)."""


class ConfigError(DataError):
    """Invalid configuration value; message names the offending key."""


class NumericalError(Exception):
    """Non-finite values where finite ones are required (e.g. gradients)."""


class InfeasibleAlignment(ValueError):
    """Raised when a target sequence cannot be aligned to the given frames."""
