"""Reuse and malleability trade-offs for compressed storage of finite sources."""

from .dist import Alphabet, JointDistribution
from .errors import (
    DecodeError, MalleableError, NumericalError, ResourceLimitError, UndefinedRowError,
    ValidationError,
)
from .partitions import Partition
from .solver import MalleabilityCurve, evaluate_partition, exact_curve, heuristic_curve

__version__ = "0.1.0"
