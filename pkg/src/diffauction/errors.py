"""Exception types shared across the package.

The CLI maps these onto exit codes: ParseError -> 2, PreconditionError -> 3.
"""


class DiffAuctionError(Exception):
    """Base class for all package errors."""


class ParseError(DiffAuctionError):
    """Malformed instance file, config, or mechanism spec.

    `context` carries a line number or field path when available.
    """

    def __init__(self, message, context=None):
        self.context = context
        super().__init__(f"{context}: {message}" if context else message)


class PreconditionError(DiffAuctionError):
    """An operation was called outside its stated preconditions."""


class DomainError(DiffAuctionError):
    """Argument outside the mathematical domain (support, virtual range)."""


class SingularityError(DomainError):
    """Density vanishes where the virtual value transform needs it."""


class NoSaleError(DiffAuctionError):
    """The entire virtual range is negative; no reserve price exists."""
