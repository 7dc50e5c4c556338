"""Exception types shared across the package."""


class PnplanError(Exception):
    """Base class for all package errors."""


class ContractViolation(PnplanError):
    """An operation was called with arguments violating its contract."""


class InfeasibleFiring(PnplanError):
    """Applying a firing vector would drive some place negative."""


class ParseError(PnplanError):
    """Malformed input text.  Carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class OracleOverflow(PnplanError):
    """Brute-force reachability exceeded its node cap; shrink the instance."""


class InternalInconsistency(PnplanError):
    """A produced plan failed internal verification; never returned silently."""
