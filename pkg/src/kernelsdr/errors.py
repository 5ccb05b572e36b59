"""Exception hierarchy shared by the library and the command line."""


class SDRError(Exception):
    """Base class for all errors raised by kernelsdr."""


class InputError(SDRError, ValueError):
    """Malformed arguments: wrong shapes, invalid configuration values."""


class DegenerateInputError(InputError):
    """Inputs are well formed but carry no usable spread or signal."""


class DataError(SDRError):
    """A data file could not be read or contains invalid cells."""


class NumericError(SDRError, ArithmeticError):
    """A numerical routine failed or produced non-finite values."""
