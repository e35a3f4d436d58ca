"""Upper and lower capacity bounds for the optical intensity channel Y = X + Z.

The input X is nonnegative with an average-power limit E and optionally a
peak limit A; Z is Gaussian with standard deviation sigma.
"""
from .bounds import BoundEstimate, ConstraintSpec, case_of
from .errors import ConvergenceError, DomainError
from .optimize import Envelope, envelope

__all__ = [
    "BoundEstimate",
    "ConstraintSpec",
    "ConvergenceError",
    "DomainError",
    "Envelope",
    "case_of",
    "envelope",
]
__version__ = "0.1.0"
