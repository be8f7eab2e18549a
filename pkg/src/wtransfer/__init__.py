"""Weighted Diophantine transference toolkit."""

from .errors import (
    BudgetExceeded,
    DomainError,
    IndeterminateComparison,
    InstanceParseError,
    NotPrimitive,
    PrecisionExhausted,
    RangeError,
    TooFewRecords,
    WTransferError,
)
from .kernels import BACKEND
from .weights import ProblemInstance, WeightedBox, Weights, load_instance

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BudgetExceeded",
    "DomainError",
    "IndeterminateComparison",
    "InstanceParseError",
    "NotPrimitive",
    "PrecisionExhausted",
    "ProblemInstance",
    "RangeError",
    "TooFewRecords",
    "WTransferError",
    "WeightedBox",
    "Weights",
    "load_instance",
]
