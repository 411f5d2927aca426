"""Exception hierarchy.

The CLI maps each class to an exit code, so library code should raise the
most specific one that applies.
"""


class AttritionError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AttritionError, ValueError):
    """Invalid parameters or configuration (CLI exit code 2)."""


class DataError(AttritionError, ValueError):
    """Malformed or inconsistent input data (CLI exit code 3)."""


class DegenerateDataError(AttritionError, ValueError):
    """Data that admits no meaningful numeric answer (CLI exit code 4)."""
