"""Exception hierarchy shared by every module."""


class WTransferError(Exception):
    pass


class DomainError(WTransferError, ValueError):
    """A formula was evaluated outside the range where it is stated."""


class RangeError(WTransferError, ValueError):
    """A family parameter lies outside the family's range."""


class IndeterminateComparison(WTransferError):
    """Two quantities could not be ordered at the current working precision.

    Callers are expected to retry at a higher precision.
    """


class PrecisionExhausted(WTransferError):
    pass


class BudgetExceeded(WTransferError):
    """An enumeration visited more nodes than its budget allows."""


class TooFewRecords(WTransferError):
    pass


class NotPrimitive(WTransferError, ValueError):
    pass


class InstanceParseError(WTransferError, ValueError):
    pass
