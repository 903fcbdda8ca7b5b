"""Exception hierarchy shared across the package."""


class UidforgeError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(UidforgeError):
    """An argument is outside the domain an operation is defined on."""


class ConsistencyError(UidforgeError):
    """Inputs are individually valid but mutually inconsistent
    (e.g. interstate in/out totals that do not balance, or a ledger
    decrement that would go negative)."""


class AllocationError(UidforgeError):
    """An unknown-age count cannot be prorated (no known-age mass)."""


class UndefinedEstimateError(UidforgeError):
    """A dual-system estimate is undefined (no overlap between lists)."""


class InsufficientDataError(UidforgeError):
    """Not enough data to produce the requested output
    (too few post-burn-in samples, too few series rows to chart)."""


class InitializationError(UidforgeError):
    """A sampler could not be started from a valid state."""


class ParseError(UidforgeError):
    """A file could not be parsed. Carries the path and line number."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class DataError(ParseError):
    """A file parsed but its contents violate a data rule
    (duplicate key, negative count, unbalanced flows)."""
