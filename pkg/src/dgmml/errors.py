"""Exception types shared across the library."""


class Error(Exception):
    """Base class for all library errors."""


class IoError(Error):
    """A file could not be read."""


class ParseError(Error):
    """A cell in an input file is malformed.

    ``row`` is the 1-based line number in the file (the header is line 1),
    ``col`` the 1-based column number.
    """

    def __init__(self, row, col, message=None):
        self.row = row
        self.col = col
        super().__init__(f"row {row}, column {col}: {message or 'not a finite number'}")


class LabelError(Error):
    """The label column does not contain exactly two distinct values."""


class ConfigError(Error):
    """An invalid parameter or parameter combination."""


class ContractError(Error):
    """A documented precondition was violated by the caller."""


class SingleClassError(Error):
    """An operation that needs both classes was given a pure node."""


class NoValidSplitError(Error):
    """Every candidate feature is constant within the node."""


class DegenerateError(Error):
    """All candidate weights vanished; no usable projection exists."""


class DimensionError(Error):
    """An input vector's length does not match the model's feature count."""
