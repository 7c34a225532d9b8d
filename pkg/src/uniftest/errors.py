"""Exception hierarchy shared by all modules.

The CLI maps :class:`ValidationError` to exit code 2 and
:class:`BudgetExceeded` to exit code 3.
"""


class UniftestError(Exception):
    """Base class for all package errors."""


class ValidationError(UniftestError, ValueError):
    """Bad parameters or malformed input."""


class FamilyParseError(ValidationError):
    """A family file does not conform to the text format."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class BudgetExceeded(UniftestError):
    """An exact oracle or enumeration would exceed its configured size budget."""


class InsufficientMatching(BudgetExceeded):
    """Matching search did not reach the requested size within the restart budget."""
