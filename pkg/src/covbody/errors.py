"""Exception types shared across covbody modules."""


class CovbodyError(Exception):
    """Base class for all covbody errors."""


class InputError(CovbodyError, ValueError):
    """Malformed or inconsistent input (unbounded body, bad schema, ...).

    Mapped to exit status 2 by the CLI.
    """


class DegenerateMeasureError(InputError):
    """A measure or surface-area measure degenerates (zero mass where
    positive mass is required, e.g. a vanishing projection support value)."""


class NumericError(CovbodyError, RuntimeError):
    """A numeric routine failed to converge or left its validity range.

    Mapped to exit status 3 by the CLI.
    """
