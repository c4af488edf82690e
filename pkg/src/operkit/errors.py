"""Exception types shared across the toolkit."""


class OperkitError(Exception):
    """Base class for toolkit errors."""


class InputFormatError(OperkitError):
    """An input file or stream violates its declared format."""


class PreconditionError(OperkitError):
    """An operation was invoked on data outside its stated preconditions."""
